"""Worked instances with known answers, used by the fixture experiments and tests."""

import numpy as np

from .feedback import ConflictMatrix, StateFeedbackMatrix

# Six packets; row i lists the conflict flags of packet i+1 with packets i+2..6.
SIX_PACKET_CONFLICTS = ConflictMatrix.from_upper_rows([
    [0, 0, 0, 1, 1],
    [0, 1, 0, 1],
    [1, 1, 0],
    [1, 1],
    [1],
])

FIVE_RECEIVER_SFM = StateFeedbackMatrix.from_rows([
    [1, 0, 0, 1, 1, 0],
    [1, 0, 0, 0, 0, 1],
    [1, 1, 0, 0, 0, 1],
    [1, 1, 0, 1, 0, 0],
    [0, 0, 1, 0, 0, 1],
])

FIVE_RECEIVER_CONFLICTS = ConflictMatrix.from_upper_rows([
    [1, 0, 1, 1, 1],
    [0, 1, 0, 1],
    [0, 0, 1],
    [1, 0],
    [0],
])

# Three receivers, each missing two of three packets; every pair conflicts.
THREE_RECEIVER_SFM = StateFeedbackMatrix.from_rows([
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
])

# True = erased; five coded slots.
THREE_RECEIVER_SCHEDULE = np.array([
    [1, 0, 0, 0, 0],
    [1, 0, 1, 0, 0],
    [0, 0, 0, 0, 0],
], dtype=bool)
