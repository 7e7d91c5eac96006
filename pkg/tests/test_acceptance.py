"""Acceptance criteria, each checked at its stated tolerance.

Every test records its outcome in ``acceptance_log.RESULTS``; the terminal
summary prints one PASS/FAIL line per criterion.
"""

import contextlib
import importlib.util
import io
import json
import math
import os
import time

import numpy as np
import pytest

import oracles
from acceptance_log import RESULTS
from conftest import FIXTURES
from percept.backend import image as I
from percept.backend import quaternion as Q
from percept.backend.boxes import AnchorSet, compute_ious, decode, encode, nms, to_center_form
from percept.backend.camera import CameraIntrinsics, Pose, project_points, solve_pnp_dlt
from percept.cli import main
from percept.datasets import BatchPlan, batch_sizes, batches, load_manifest
from percept.errors import (ArityMismatch, DegenerateConfiguration, InsufficientPoints, SchemaViolation,
                            UnknownMessageType)
from percept.messages import Box2D, Keypoints3D, Pose6D, parse_message, serialize_message
from percept.pipeline import Processor, SequentialProcessor, call, extend_with, flatten
from percept.processors import MatchAnchors, RandomBrightness, RandomFlipLeftRight, Resize
from percept.rng import RngStream

CLI = os.path.join(FIXTURES, "cli")


@contextlib.contextmanager
def criterion(number, title):
    """Record the block's outcome; ``detail`` entries are appended to the line."""
    detail = []
    try:
        yield detail
    except BaseException as exc:
        RESULTS[number] = (title, False, "; ".join(detail + [f"{type(exc).__name__}: {exc}"[:200]]))
        raise
    RESULTS[number] = (title, True, "; ".join(detail))


def random_corner_boxes(rng, n):
    xy = rng.uniform(0, 1, (n, 2))
    wh = rng.uniform(0.01, 0.6, (n, 2))
    return np.hstack([xy, xy + wh])


# ----------------------------------------------------------------- 1

def test_criterion_1_nms_oracle_equivalence():
    with criterion(1, "NMS equals brute-force greedy oracle") as detail:
        rng = np.random.default_rng(1)
        start = time.perf_counter()
        for _ in range(1000):
            n = int(rng.integers(0, 13))
            boxes = random_corner_boxes(rng, n)
            # coarse scores force ties, which must break by index
            scores = rng.integers(0, 6, n) / 5.0
            threshold = float(rng.uniform(0.1, 0.9))
            top_k = int(rng.integers(1, 14))
            expected = oracles.greedy_nms(boxes.tolist(), scores.tolist(), threshold, top_k)
            assert list(nms(boxes, scores, threshold, top_k)) == expected
        elapsed = time.perf_counter() - start
        detail.append(f"{elapsed:.2f}s")
        assert elapsed < 5.0


# ----------------------------------------------------------------- 2

def test_criterion_2_encode_decode_round_trip():
    with criterion(2, "encode/decode round trip") as detail:
        rng = np.random.default_rng(2)
        gt = to_center_form(random_corner_boxes(rng, 1000))
        anchors = to_center_form(random_corner_boxes(rng, 1000))
        offsets = encode(gt, anchors, (0.1, 0.2))
        back = decode(offsets, AnchorSet(anchors, (0.1, 0.2)), clip=False)
        error = np.abs(back - np.hstack([gt[:, :2] - gt[:, 2:] / 2, gt[:, :2] + gt[:, 2:] / 2])).max()
        detail.append(f"max error {error:.1e}")
        assert error <= 1e-6
        hand = encode([0.54, 0.5, 0.2, 0.2], [0.5, 0.5, 0.2, 0.2], (0.1, 0.2))
        assert np.abs(hand - [2.0, 0, 0, 0]).max() <= 1e-9
        for off, anchor in zip(offsets[:50], anchors[:50]):
            single = decode(off[None], AnchorSet(anchor[None], (0.1, 0.2)), clip=False)[0]
            assert np.abs(single - oracles.decode_one(off, anchor, clip=False)).max() <= 1e-12


# ----------------------------------------------------------------- 3

def test_criterion_3_iou():
    with criterion(3, "IoU symmetry, bounds, hand case, grid oracle") as detail:
        rng = np.random.default_rng(3)
        a, b = random_corner_boxes(rng, 200), random_corner_boxes(rng, 300)
        ab, ba = compute_ious(a, b), compute_ious(b, a)
        assert np.abs(ab - ba.T).max() <= 1e-7
        assert ab.min() >= 0 and ab.max() <= 1
        assert abs(compute_ious([[0, 0, 2, 2]], [[1, 1, 3, 3]])[0, 0] - 1 / 7) <= 1e-9
        worst = 0.0
        for _ in range(100):
            pair = []
            for _ in range(2):
                lo = rng.integers(0, 900, 2)
                hi = lo + rng.integers(1, 1000 - lo)
                pair.append([int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])])
            grid = oracles.grid_iou(*pair)
            ours = compute_ious(np.array([pair[0]]) / 1000, np.array([pair[1]]) / 1000)[0, 0]
            worst = max(worst, abs(ours - grid))
        detail.append(f"grid max diff {worst:.1e}")
        assert worst <= 1e-3


# ----------------------------------------------------------------- 4

def test_criterion_4_quaternions():
    with criterion(4, "quaternion suite") as detail:
        rng = np.random.default_rng(4)
        qs = oracles.random_unit_quaternions(rng, 1000)
        ortho = det = round_trip = matrix_trip = homo = 0.0
        for q, p in zip(qs, qs[::-1]):
            R = Q.to_matrix(q)
            ortho = max(ortho, np.abs(R.T @ R - np.eye(3)).max())
            det = max(det, abs(np.linalg.det(R) - 1))
            round_trip = max(round_trip, np.abs(Q.from_matrix(R) - Q.canonicalize(q)).max())
            homo = max(homo, np.abs(Q.to_matrix(Q.multiply(q, p)) - R @ Q.to_matrix(p)).max())
        for _ in range(1000):
            angle = math.pi - 10 ** rng.uniform(-12, -1)
            R = oracles.rodrigues(rng.normal(size=3), angle)
            matrix_trip = max(matrix_trip, np.abs(Q.to_matrix(Q.from_matrix(R)) - R).max())
            q = Q.from_matrix(R)
            round_trip = max(round_trip, np.abs(Q.from_matrix(Q.to_matrix(q)) - q).max())
        detail.append(f"ortho {ortho:.0e}, det {det:.0e}, trip {max(round_trip, matrix_trip):.0e}, hom {homo:.0e}")
        assert ortho <= 1e-9 and det <= 1e-9
        assert round_trip <= 1e-7 and matrix_trip <= 1e-7
        assert homo <= 1e-9


# ----------------------------------------------------------------- 5

def test_criterion_5_pnp():
    with criterion(5, "PnP round trip") as detail:
        rng = np.random.default_rng(5)
        camera = CameraIntrinsics(500.0, 480.0, 320.0, 240.0)
        start = time.perf_counter()
        t_err = r_err = 0.0
        for q in oracles.random_unit_quaternions(rng, 1000):
            t = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(1, 5)])
            truth = Pose(q, t)
            points = rng.uniform(-0.4, 0.4, (8, 3))
            est = solve_pnp_dlt(points, project_points(points, truth, camera), camera)
            t_err = max(t_err, np.linalg.norm(est.translation - t) / np.linalg.norm(t))
            r_err = max(r_err, oracles.rotation_angle(Q.to_matrix(est.rotation), Q.to_matrix(q)))
        elapsed = time.perf_counter() - start
        detail.append(f"t rel {t_err:.0e}, rot {r_err:.0e} rad, {elapsed:.2f}s")
        assert t_err <= 1e-6 and r_err <= 1e-6
        assert elapsed < 10.0
        points = rng.uniform(-0.4, 0.4, (8, 3))
        pose = Pose(Q.IDENTITY, [0, 0, 3])
        with pytest.raises(InsufficientPoints):
            solve_pnp_dlt(points[:5], project_points(points[:5], pose, camera), camera)
        points[:, 2] = 0
        with pytest.raises(DegenerateConfiguration):
            solve_pnp_dlt(points, project_points(points, pose, camera), camera)


# ----------------------------------------------------------------- 6

def test_criterion_6_images():
    with criterion(6, "image suite") as detail:
        rng = np.random.default_rng(6)
        pixels = rng.integers(0, 256, (10_000, 3), dtype=np.uint8)
        float_error = np.abs(I.hsv_to_rgb(I.rgb_to_hsv(pixels)) - pixels / 255.0).max()
        detail.append(f"hsv {float_error:.0e}")
        assert float_error <= 1 / 255
        image = rng.integers(0, 256, (32, 48, 3), dtype=np.uint8)
        assert np.array_equal(I.adjust_brightness(image, 0), image)
        assert np.array_equal(I.adjust_contrast(image, 1.0), image)
        # one uint8 level is 1/255 of the unit range
        assert np.abs(I.adjust_saturation(image, 1.0).astype(int) - image).max() <= 1
        assert np.abs(I.adjust_hue(image, 0.0).astype(int) - image).max() <= 1
        assert np.array_equal(I.flip_left_right(I.flip_left_right(image)), image)
        two = np.repeat(np.array([[0, 2], [4, 6]], dtype=np.uint8)[..., None], 3, axis=2)
        assert I.resize_bilinear(two, 1, 1).tolist() == [[[3, 3, 3]]]
        green = I.adjust_hue(np.array([[[255, 0, 0]]], dtype=np.uint8), 120)
        assert np.abs(green.astype(int) - [0, 255, 0]).max() <= 1


# ----------------------------------------------------------------- 7

class Shift(Processor):
    def __init__(self, amount):
        super().__init__(f"Shift{amount}")
        self.amount = amount

    def apply(self, packet, rng):
        return (packet[0] * 1.5 + self.amount,)


class Jitter(Processor):
    def apply(self, packet, rng):
        return (packet[0] + rng.uniform(-1, 1),)


class Pair(Processor):
    in_arity, out_arity = 1, 2

    def apply(self, packet, rng):
        return packet[0], rng.random()


def random_nested(rng, depth=0):
    steps = []
    for _ in range(int(rng.integers(0, 5))):
        roll = rng.random()
        if roll < 0.3 and depth < 3:
            steps.append(random_nested(rng, depth + 1))
        elif roll < 0.65:
            steps.append(Jitter())
        else:
            steps.append(Shift(int(rng.integers(-3, 4))))
    return SequentialProcessor(steps, f"level{depth}")


def test_criterion_7_pipeline_engine():
    with criterion(7, "pipeline engine") as detail:
        packet = (np.arange(4), "label", None)
        assert call(SequentialProcessor(), packet, RngStream(1)) == packet
        rng = np.random.default_rng(7)
        leaves = 0
        for i in range(100):
            nested = random_nested(rng)
            flat = flatten(nested)
            assert all(not isinstance(s, SequentialProcessor) for s in flat.steps)
            leaves += len(flat.steps)
            x = (float(rng.normal()),)
            a = call(nested, x, RngStream(i))
            assert a == call(flat, x, RngStream(i))
            assert np.float64(a[0]).tobytes() == np.float64(call(nested, x, RngStream(i))[0]).tobytes()
        detail.append(f"{leaves} leaves")
        with pytest.raises(ArityMismatch):
            SequentialProcessor([Pair(), Shift(1)])
        with pytest.raises(ArityMismatch):
            extend_with(SequentialProcessor([Pair()]), Jitter())
        with pytest.raises(ArityMismatch):
            call(SequentialProcessor([Shift(1)]), (1.0, 2.0), RngStream(0))


# ----------------------------------------------------------------- 8

def test_criterion_8_batch_dispatcher(tmp_path, write_ppm):
    with criterion(8, "batch dispatcher") as detail:
        rng = np.random.default_rng(8)
        lines = [json.dumps({"classes": {"a": 1, "b": 2}})]
        for i in range(10):
            write_ppm(tmp_path / f"{i}.ppm", rng.integers(0, 256, (int(rng.integers(3, 9)), 6, 3), dtype=np.uint8))
            lines.append(json.dumps({"image_path": f"{i}.ppm", "boxes": [
                {"box": [0.1, 0.1, 0.4 + i / 20, 0.8], "class_name": "ab"[i % 2]}]}))
        (tmp_path / "m.jsonl").write_text("\n".join(lines) + "\n")
        manifest = load_manifest(tmp_path / "m.jsonl")
        pipeline = SequentialProcessor([RandomFlipLeftRight(), RandomBrightness(), Resize(5, 5),
                                        MatchAnchors(AnchorSet([[0.3, 0.3, 0.5, 0.5], [0.7, 0.6, 0.4, 0.6]]))])

        def per_sample(batch_size, workers=1):
            table = {}
            for epoch in (0, 1):
                seen = []
                for batch in batches(manifest, pipeline, BatchPlan(7, batch_size, epoch=epoch), workers):
                    seen += batch.sample_indices
                    for j, index in enumerate(batch.sample_indices):
                        table[epoch, index] = b"".join(a[j].tobytes() for a in batch.outputs)
                assert sorted(seen) == list(range(10))
            return table

        two, five = per_sample(2), per_sample(5)
        assert two == five == per_sample(5, workers=4)
        detail.append(f"{len(two)} sample outputs compared")
        sizes = [len(b) for b in batches(manifest, pipeline, BatchPlan(7, 3))]
        dropped = [len(b) for b in batches(manifest, pipeline, BatchPlan(7, 3, drop_last=True))]
        assert sizes == batch_sizes(10, 3, False) == [3, 3, 3, 1]
        assert dropped == batch_sizes(10, 3, True) == [3, 3, 3]


# ----------------------------------------------------------------- 9

def cli_fixture(name):
    return os.path.join(CLI, name)


def load_golden_module():
    spec = importlib.util.spec_from_file_location("make_goldens", os.path.join(FIXTURES, "make_goldens.py"))
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_criterion_9_cli_golden(tmp_path):
    with criterion(9, "end-to-end CLI golden") as detail:
        goldens = load_golden_module()
        start = time.perf_counter()
        out, err = io.StringIO(), io.StringIO()
        code = main(["postprocess", "--scores", cli_fixture("scores.json"), "--anchors", cli_fixture("anchors.json"),
                     "--classes", cli_fixture("classes.json"), *goldens.POSTPROCESS_ARGS], out, err)
        assert code == 0, err.getvalue()
        boxes = tmp_path / "boxes.jsonl"
        boxes.write_bytes(out.getvalue().encode("utf-8"))
        drawn = tmp_path / "drawn.ppm"
        code = main(["draw", "--image", cli_fixture("canvas.ppm"), "--boxes", str(boxes), "--out", str(drawn)],
                    io.StringIO(), err)
        assert code == 0, err.getvalue()
        elapsed = time.perf_counter() - start
        with open(cli_fixture("expected_boxes.jsonl"), "rb") as f:
            expected_boxes = f.read()
        with open(cli_fixture("expected_draw.ppm"), "rb") as f:
            expected_draw = f.read()
        detail.append(f"{len(expected_boxes.splitlines())} boxes, {elapsed * 1000:.0f}ms")
        assert boxes.read_bytes() == expected_boxes
        assert drawn.read_bytes() == expected_draw
        assert elapsed < 1.0


def test_goldens_regenerate_identically(tmp_path):
    goldens = load_golden_module()
    goldens.OUT = str(tmp_path)
    goldens.main()
    for name in sorted(os.listdir(CLI)):
        with open(os.path.join(CLI, name), "rb") as f:
            assert (tmp_path / name).read_bytes() == f.read(), name


# ----------------------------------------------------------------- 10

def random_message(rng):
    name = "".join(rng.choice(list("abcxyz_é 0"), int(rng.integers(0, 9))))
    kind = rng.integers(0, 3)
    if kind == 0:
        x0, x1 = sorted(rng.integers(-100, 3000, 2).tolist())
        y0, y1 = sorted(rng.integers(-100, 3000, 2).tolist())
        return Box2D(name, float(rng.uniform()), [x0, y0, x1, y1])
    if kind == 1:
        q = Q.canonicalize(oracles.random_unit_quaternions(rng, 1)[0])
        return Pose6D(name, q.tolist(), (rng.normal(size=3) * 10 ** rng.uniform(-5, 5)).tolist())
    return Keypoints3D(name, rng.normal(size=(int(rng.integers(0, 6)), 3)).tolist())


def test_criterion_10_messages():
    with criterion(10, "message round trip and schema errors") as detail:
        rng = np.random.default_rng(10)
        for _ in range(1000):
            message = random_message(rng)
            assert parse_message(serialize_message(message)) == message
        rejected = 0
        for line, error in [
            ('{"type":"Mesh","class_name":"a"}', UnknownMessageType),
            ('{"type":"Box2D","class_name":"a","score":0.5,"coordinates":[0,0,1,1],"x":0}', SchemaViolation),
            ('{"type":"Box2D","class_name":"a","coordinates":[0,0,1,1]}', SchemaViolation),
            ('{"type":"Box2D","class_name":"a","score":2,"coordinates":[0,0,1,1]}', SchemaViolation),
            ('{"type":"Pose6D","class_name":"a","quaternion":[0.5,0,0,0],"translation":[0,0,0]}', SchemaViolation),
            ('{"type":"Keypoints3D","class_name":"a","points":[[0,0]]}', SchemaViolation),
        ]:
            with pytest.raises(error):
                parse_message(line)
            rejected += 1
        with pytest.raises(SchemaViolation):
            Pose6D("a", [0.5, 0, 0, 0], [0, 0, 0])
        detail.append(f"1000 round trips, {rejected + 1} rejections")
