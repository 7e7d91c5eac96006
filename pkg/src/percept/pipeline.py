"""Processors and their sequential composition.

A *packet* is a plain tuple of values.  Processors consume a packet and
return a new one; values are threaded between steps by position.  Arities
are declared per processor and ``None`` means variadic (any length).  A
variadic output passes the packet length through, so it matches whatever
follows.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

from .errors import ArityMismatch, IndexOutOfRange, NameAmbiguous, NameNotFound, StepError
from .rng import RngStream

Packet = tuple


def _fmt_arity(arity):
    return "*" if arity is None else str(arity)


def compatible(out_arity: Optional[int], in_arity: Optional[int]) -> bool:
    return out_arity is None or in_arity is None or out_arity == in_arity


class Processor:
    """Base class for a named unit of computation over a packet.

    Subclasses override ``apply(packet, rng)`` and set ``in_arity`` /
    ``out_arity`` as class attributes.  ``apply`` must not mutate its input
    and must draw randomness only from ``rng``.
    """

    in_arity: Optional[int] = 1
    out_arity: Optional[int] = 1

    def __init__(self, name: Optional[str] = None):
        self.name = name or type(self).__name__

    def apply(self, packet: Packet, rng: RngStream) -> Packet:
        raise NotImplementedError

    def __call__(self, *values, rng: Optional[RngStream] = None):
        """Run on loose values; a single output value is returned unwrapped.

        Without ``rng`` a stream seeded with 0 is used, so repeated calls are
        reproducible.
        """
        out = run_step(self, tuple(values), rng if rng is not None else RngStream(0))
        return out[0] if len(out) == 1 else out

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r} {_fmt_arity(self.in_arity)}->{_fmt_arity(self.out_arity)}>"


class FunctionProcessor(Processor):
    """Adapter for a plain ``f(packet, rng) -> packet`` function."""

    in_arity = None

    def __init__(self, function: Callable, name: Optional[str] = None, out_arity: Optional[int] = None):
        super().__init__(name or getattr(function, "__name__", None) or "function")
        self.function = function
        self.out_arity = out_arity

    def apply(self, packet, rng):
        return self.function(packet, rng)


def as_processor(step) -> Processor:
    if isinstance(step, Processor):
        return step
    if callable(step):
        return FunctionProcessor(step)
    raise TypeError(f"cannot use {step!r} as a pipeline step")


def run_step(step: Processor, packet: Packet, rng: RngStream) -> Packet:
    """Apply one processor with arity checks on both sides."""
    if step.in_arity is not None and len(packet) != step.in_arity:
        raise ArityMismatch(f"{step.name!r} expects {step.in_arity} values, got {len(packet)}")
    out = step.apply(packet, rng)
    if not isinstance(out, tuple):
        out = (out,)
    if step.out_arity is not None and len(out) != step.out_arity:
        raise ArityMismatch(f"{step.name!r} declared {step.out_arity} outputs, returned {len(out)}")
    return out


class SequentialProcessor(Processor):
    """Ordered, immutable composition of processors.

    Plain callables are wrapped with :class:`FunctionProcessor`.  Editing
    methods return new pipelines.

    Example::

        augment = SequentialProcessor([RandomContrast(), RandomBrightness()])
        image = augment(image, rng=RngStream(7))
    """

    def __init__(self, steps: Iterable = (), name: str = "SequentialProcessor"):
        super().__init__(name)
        self.steps = tuple(as_processor(step) for step in steps)
        for i in range(len(self.steps) - 1):
            left, right = self.steps[i], self.steps[i + 1]
            if not compatible(left.out_arity, right.in_arity):
                raise ArityMismatch(
                    f"step {i} {left.name!r} outputs {left.out_arity} values but "
                    f"step {i + 1} {right.name!r} expects {right.in_arity}"
                )

    @property
    def in_arity(self):
        return self.steps[0].in_arity if self.steps else None

    @property
    def out_arity(self):
        return self.steps[-1].out_arity if self.steps else None

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, index):
        return self.steps[index]

    def apply(self, packet, rng):
        return call(self, packet, rng)

    def extend_with(self, processor, position=None) -> "SequentialProcessor":
        return extend_with(self, processor, position)

    def add(self, processor) -> "SequentialProcessor":
        return extend_with(self, processor)

    def remove(self, name: str) -> "SequentialProcessor":
        return remove(self, name)

    def flatten(self) -> "SequentialProcessor":
        return flatten(self)

    def describe(self) -> str:
        return describe(self)


def extend_with(pipeline: SequentialProcessor, processor, position: Optional[int] = None) -> SequentialProcessor:
    """Insert ``processor`` at ``position`` (default: append)."""
    steps = list(pipeline.steps)
    if position is None:
        position = len(steps)
    if not 0 <= position <= len(steps):
        raise IndexOutOfRange(f"position {position} outside [0, {len(steps)}]")
    steps.insert(position, as_processor(processor))
    return SequentialProcessor(steps, pipeline.name)


def remove(pipeline: SequentialProcessor, name: str) -> SequentialProcessor:
    matches = [i for i, step in enumerate(pipeline.steps) if step.name == name]
    if not matches:
        raise NameNotFound(f"no step named {name!r}")
    if len(matches) > 1:
        raise NameAmbiguous(f"{len(matches)} steps named {name!r}")
    steps = list(pipeline.steps)
    del steps[matches[0]]
    return SequentialProcessor(steps, pipeline.name)


def concat(*pipelines: SequentialProcessor, name: str = "SequentialProcessor") -> SequentialProcessor:
    return SequentialProcessor([step for p in pipelines for step in p.steps], name)


def _leaves(steps: Sequence[Processor]):
    for step in steps:
        if isinstance(step, SequentialProcessor):
            yield from _leaves(step.steps)
        else:
            yield step


def flatten(pipeline: SequentialProcessor) -> SequentialProcessor:
    """Inline nested pipelines, depth first."""
    return SequentialProcessor(list(_leaves(pipeline.steps)), pipeline.name)


def call(pipeline: SequentialProcessor, packet: Packet, rng: RngStream, start_index: int = 0) -> Packet:
    """Run every leaf step in order.

    Leaf ``i`` of the flattened pipeline receives
    ``rng.fork(f"{start_index + i}:{name}")``, so nesting never changes the
    result and inserting a step only perturbs the randomness of the steps
    after it.  ``start_index`` lets a pipeline continue the numbering of a
    preceding one.
    """
    packet = tuple(packet)
    for i, step in enumerate(_leaves(pipeline.steps)):
        index = start_index + i
        step_rng = rng.fork(f"{index}:{step.name}")
        try:
            packet = run_step(step, packet, step_rng)
        except ArityMismatch as exc:
            raise ArityMismatch(f"step {index}: {exc}") from exc
        except Exception as exc:
            raise StepError(index, step.name, exc) from exc
    return packet


def describe(pipeline: SequentialProcessor) -> str:
    lines = [f"{pipeline.name} ({len(pipeline.steps)} steps)"]
    for i, step in enumerate(pipeline.steps):
        lines.append(f"{i:>3}  {step.name}  {_fmt_arity(step.in_arity)} -> {_fmt_arity(step.out_arity)}")
    return "\n".join(lines) + "\n"
