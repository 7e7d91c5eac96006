"""Shared record of acceptance outcomes, printed in the terminal summary."""

# criterion number -> (title, passed, detail)
RESULTS = {}
