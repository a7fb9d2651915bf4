"""Shared test utilities: forced-activity frames, brute-force oracles and
structural assertions."""

from itertools import product

import numpy as np

from mm_access import model
from mm_access.detectors import Reconstruction


def frame_with_active(cfg, active_devices, rng):
    """Frame whose active set is forced to ``active_devices``."""
    activity = np.zeros(cfg.k, dtype=np.int8)
    activity[list(active_devices)] = 1
    return model.generate_frame_for_activity(cfg, activity, rng)


def ml_oracle_slot(y_col, h, devices, cfg):
    """Exhaustive ML search over all (n_t * m)^len(devices) symbol combos.

    Returns per-device (map_index, qam_label) of the residual-minimizing
    combination; ties broken toward the lexicographically first combo.
    """
    points = model.qam_constellation(cfg.m)
    best = None
    for combo in product(range(cfg.n_t * cfg.m), repeat=len(devices)):
        x = np.zeros(h.shape[1], dtype=complex)
        for dev, c in zip(devices, combo):
            u, label = divmod(c, cfg.m)
            x[dev * cfg.n_t + u] = points[label]
        res = np.linalg.norm(y_col - h @ x)
        if best is None or res < best[0]:
            best = (res, combo)
    return [divmod(c, cfg.m) for c in best[1]]


def decoded_pairs(rec, cfg):
    """Per device/slot (map_index, qam_label) decoded by a detector."""
    labels = model.bits_to_int(rec.bits[:, :, cfg.m_r :])
    return rec.map_index, labels


def assert_ground_truth_structure(truth, cfg):
    """One nonzero per active block per slot, zero blocks for inactive
    devices, values and positions consistent with the per-device fields."""
    active = truth.active
    inactive = np.setdiff1d(np.arange(cfg.k), active)
    blocks = truth.x.reshape(cfg.k, cfg.n_t, cfg.j)
    nonzero_counts = (np.abs(blocks) > 0).sum(axis=1)  # (k, j)
    assert (nonzero_counts[inactive] == 0).all()
    assert (nonzero_counts[active] == 1).all()
    for j in range(cfg.j):
        assert np.count_nonzero(truth.x[:, j]) == active.size
        if active.size:
            rows = active * cfg.n_t + truth.map_index[active, j]
            assert np.array_equal(truth.x[rows, j], truth.qam_symbol[active, j])
    assert (truth.map_index[active] >= 0).all() and (truth.map_index[active] < cfg.n_t).all()
    if inactive.size:
        assert (truth.map_index[inactive] == -1).all()


def assert_reconstruction_structure(rec: Reconstruction, cfg):
    """Exactly one nonzero per detected device block per slot, zero elsewhere."""
    blocks = rec.x_hat.reshape(cfg.k, cfg.n_t, cfg.j)
    counts = (np.abs(blocks) > 0).sum(axis=1)
    others = np.setdiff1d(np.arange(cfg.k), rec.devices)
    assert (counts[others] == 0).all()
    if rec.devices.size:
        assert (counts[rec.devices] == 1).all()
