"""
Completion solvers.

- lrfmtc: trace-norm regularized factor matrices, block coordinate descent
- halrtc: noisy HaLRTC baseline (ADMM)
- als: CP-ALS used for initialization
"""
