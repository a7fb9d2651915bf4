"""Recovery algorithms for the media-modulation uplink.

Activity detection:
  * :func:`stromp` - structured orthogonal matching pursuit; adds one device
    per iteration using the summed block correlation across all slots, and
    stops once the residual Frobenius energy decrease falls below a
    threshold (the device added in the terminating iteration is discarded).
  * :func:`stromp_known_ka` - the same greedy loop run for exactly ``k_a``
    iterations with no stopping test; activity-detection lower bound.

Data detection (given an active set):
  * :func:`sic_ssp` - per slot, repeatedly runs a structured subspace-pursuit
    pass over the remaining devices, finalizes the strongest one, subtracts
    its contribution and repeats (successive interference cancellation).
  * :func:`gsp` - one subspace-pursuit pass per slot over the full active
    set, emitting every device at once (no cancellation); baseline.
  * :func:`oracle_ls` - least squares on the true per-slot supports; data
    error floor reference.
  * :func:`zf_benchmark` - self-contained zero-forcing receiver for the
    conventional uplink with ``k_a`` known single-antenna 16-QAM users at
    the same 4 bits per channel use.

Active sets are integer device-index arrays in discovery order. All argmax
ties resolve to the smallest index so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .numerics import (
    DegenerateSupportError,
    frobenius_norm,
    hermitian_mul,
    lstsq,
    lstsq_stacked,
)


@dataclass
class Reconstruction:
    """Detected transmit signal for the devices of one active set.

    ``x_hat`` has exactly one nonzero per detected device block per slot;
    row ``n`` of the per-device arrays belongs to ``devices[n]``.
    """

    devices: np.ndarray     # (d,) device indices, discovery order
    x_hat: np.ndarray       # (k*n_t, j) complex
    map_index: np.ndarray   # (d, j) int16, local MAP per device/slot
    amplitude: np.ndarray   # (d, j) complex
    bits: np.ndarray        # (d, j, eta) uint8 decoded bits


def _empty_reconstruction(devices: np.ndarray, cfg: model.SystemConfig) -> Reconstruction:
    d = len(devices)
    return Reconstruction(
        devices=np.asarray(devices, dtype=np.int64),
        x_hat=np.zeros((cfg.k * cfg.n_t, cfg.j), dtype=np.complex128),
        map_index=np.full((d, cfg.j), -1, dtype=np.int16),
        amplitude=np.zeros((d, cfg.j), dtype=np.complex128),
        bits=np.zeros((d, cfg.j, cfg.eta), dtype=np.uint8),
    )


def _decode_bits(rec: Reconstruction, cfg: model.SystemConfig) -> None:
    """Fill rec.bits from (map_index, amplitude); same mapping as model.demodulate."""
    if rec.devices.size == 0:
        return
    map_bits = model.int_to_bits(rec.map_index.astype(np.int64), cfg.m_r)
    qam_bits = model.int_to_bits(model.qam_slice(rec.amplitude, cfg.m), cfg.qam_bits)
    rec.bits = np.concatenate([map_bits, qam_bits], axis=-1)


def _column_ls(h: np.ndarray, cols: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Independent single-column LS per column; rank-proof last resort."""
    sub = h[:, cols]
    denom = np.einsum("ij,ij->j", sub.conj(), sub).real
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, (sub.conj().T @ v) / safe, 0.0)


# --- structured OMP (activity detection) ------------------------------------

def _block_energies(h: np.ndarray, residual: np.ndarray, k: int, n_t: int) -> np.ndarray:
    """Per-device correlation energy summed over the block's columns and all slots."""
    corr = hermitian_mul(h, residual)
    return (np.abs(corr) ** 2).reshape(k, n_t, -1).sum(axis=(1, 2))


def _refit_residual(y: np.ndarray, h: np.ndarray, lam: list[int], n_t: int) -> np.ndarray:
    """One candidate-set refit: coarse LS over all MAPs of the devices in
    ``lam``, per-slot per-device MAP pick, per-slot fine LS, new residual."""
    lam_arr = np.asarray(lam)
    cand = (lam_arr[:, None] * n_t + np.arange(n_t)).ravel()
    coarse = lstsq(h[:, cand], y)                                   # (|lam|*n_t, j)
    picks = np.abs(coarse).reshape(len(lam), n_t, -1).argmax(axis=1)  # (|lam|, j)
    omega = lam_arr[:, None] * n_t + picks                          # global col per device/slot
    h_sub = h[:, omega]                                             # (n_r, |lam|, j)
    fine = lstsq_stacked(h_sub.transpose(2, 0, 1), y.T)             # (j, |lam|)
    return y - np.einsum("rnj,jn->rj", h_sub, fine)


def stromp(
    y: np.ndarray,
    h: np.ndarray,
    cfg: model.SystemConfig,
    trace: dict | None = None,
) -> np.ndarray:
    """Detect active devices from the frame observation ``y``.

    Stops when the residual Frobenius-norm decrease drops below ``cfg.p_th``
    (the tentatively added device is discarded), or as a safety measure when
    the candidate set would make the coarse LS underdetermined or exhaust
    all devices. Returns device indices in discovery order.

    ``trace``, if given, receives ``residual_norms`` - the committed
    residual norms starting at the raw observation.
    """
    if not cfg.p_th > 0:
        raise ValueError(f"p_th must be > 0, got {cfg.p_th}")
    return _greedy_pursuit(y, h, cfg, p_th=cfg.p_th, max_iters=None, trace=trace)


def stromp_known_ka(
    y: np.ndarray,
    h: np.ndarray,
    cfg: model.SystemConfig,
    k_a: int | None = None,
    trace: dict | None = None,
) -> np.ndarray:
    """Activity detection with the device count known: exactly ``k_a`` greedy
    iterations, no stopping test."""
    k_a = cfg.k_a if k_a is None else k_a
    return _greedy_pursuit(y, h, cfg, p_th=None, max_iters=k_a, trace=trace)


def _greedy_pursuit(y, h, cfg, p_th, max_iters, trace):
    n_t, k = cfg.n_t, cfg.k
    n_r = h.shape[0]
    gamma: list[int] = []
    residual = y
    prev_norm = frobenius_norm(y)
    norms = [prev_norm]
    iters = 0
    while max_iters is None or iters < max_iters:
        energies = _block_energies(h, residual, k, n_t)
        k_star = int(np.argmax(energies))
        lam = gamma if k_star in gamma else gamma + [k_star]
        if len(lam) * n_t > n_r or len(lam) == k:
            break
        try:
            new_residual = _refit_residual(y, h, lam, n_t)
        except DegenerateSupportError:
            break
        new_norm = frobenius_norm(new_residual)
        if p_th is not None and prev_norm - new_norm < p_th:
            break
        gamma = lam
        residual = new_residual
        prev_norm = new_norm
        norms.append(new_norm)
        iters += 1
    if trace is not None:
        trace["residual_norms"] = norms
    return np.asarray(gamma, dtype=np.int64)


# --- structured subspace pursuit (data detection) ----------------------------

def _ssp_pass(
    v: np.ndarray, h: np.ndarray, lam: list[int], n_t: int, k_hat: int
) -> tuple[np.ndarray, np.ndarray]:
    """One structured subspace-pursuit pass for the devices in ``lam``.

    Iterates: correlate the running residual with every remaining MAP column,
    keep the best MAP per device, merge with the previous support, coarse LS
    against ``v``, re-pick one MAP per device from the estimate, fine LS,
    update the residual. Terminates after ``k_hat`` iterations or when the
    per-device support map stops changing.

    Returns ``(psi, e_psi)``: one global column per device and its fine LS
    amplitude. On a rank-deficient solve, falls back to the last valid
    estimate (or per-column LS when none exists) so a slot is never aborted.
    """
    lam_arr = np.asarray(lam)
    n = lam_arr.size
    cand = (lam_arr[:, None] * n_t + np.arange(n_t)).ravel()
    h_cand = h[:, cand]
    scratch = np.zeros(h.shape[1], dtype=np.complex128)
    psi_prev: np.ndarray | None = None
    last_valid: tuple[np.ndarray, np.ndarray] | None = None
    r = v
    i = 1
    while True:
        p = hermitian_mul(h_cand, r)
        tau = np.abs(p).reshape(n, n_t).argmax(axis=1)
        omega = lam_arr * n_t + tau
        merged = omega if psi_prev is None else np.unique(np.concatenate([omega, psi_prev]))
        try:
            coarse = lstsq(h[:, merged], v)
            scratch[merged] = coarse
            eta_loc = np.abs(scratch[cand]).reshape(n, n_t).argmax(axis=1)
            scratch[merged] = 0
            psi = lam_arr * n_t + eta_loc
            e_psi = lstsq(h[:, psi], v)
        except DegenerateSupportError:
            if last_valid is not None:
                return last_valid
            return omega, _column_ls(h, omega, v)
        r = v - h[:, psi] @ e_psi
        last_valid = (psi, e_psi)
        if i >= k_hat or (psi_prev is not None and np.array_equal(psi, psi_prev)):
            return psi, e_psi
        psi_prev = psi
        i += 1


def sic_ssp(
    y: np.ndarray, h: np.ndarray, gamma: np.ndarray, cfg: model.SystemConfig
) -> Reconstruction:
    """Per-slot data detection with successive interference cancellation.

    Each slot runs ``len(gamma)`` subspace-pursuit stages; after each stage
    the device with the strongest fine estimate is finalized, its
    contribution removed from the measurement, and the remaining set shrinks
    by one. An empty ``gamma`` yields an all-zero reconstruction.
    """
    gamma = np.asarray(gamma, dtype=np.int64)
    rec = _empty_reconstruction(gamma, cfg)
    k_hat = gamma.size
    if k_hat == 0:
        return rec
    row_of = {int(dev): row for row, dev in enumerate(gamma)}
    for j in range(cfg.j):
        v = y[:, j].copy()
        lam = [int(d) for d in gamma]
        for _ in range(k_hat):
            psi, e_psi = _ssp_pass(v, h, lam, cfg.n_t, k_hat)
            n_star = int(np.argmax(np.abs(e_psi)))
            col = int(psi[n_star])
            amp = complex(e_psi[n_star])
            v -= h[:, col] * amp
            dev = lam.pop(n_star)
            rec.x_hat[col, j] = amp
            rec.map_index[row_of[dev], j] = col - dev * cfg.n_t
            rec.amplitude[row_of[dev], j] = amp
    _decode_bits(rec, cfg)
    return rec


def gsp(
    y: np.ndarray, h: np.ndarray, gamma: np.ndarray, cfg: model.SystemConfig
) -> Reconstruction:
    """No-cancellation baseline: one subspace-pursuit pass per slot over the
    full active set, emitting every device's support and amplitude at once."""
    gamma = np.asarray(gamma, dtype=np.int64)
    rec = _empty_reconstruction(gamma, cfg)
    k_hat = gamma.size
    if k_hat == 0:
        return rec
    lam = [int(d) for d in gamma]
    for j in range(cfg.j):
        psi, e_psi = _ssp_pass(y[:, j], h, lam, cfg.n_t, k_hat)
        rec.x_hat[psi, j] = e_psi
        rec.map_index[:, j] = psi - gamma * cfg.n_t
        rec.amplitude[:, j] = e_psi
    _decode_bits(rec, cfg)
    return rec


def oracle_ls(
    y: np.ndarray, h: np.ndarray, truth: model.GroundTruth, cfg: model.SystemConfig
) -> Reconstruction:
    """LS on the exact per-slot supports; MAP bits are correct by construction
    and only the QAM estimate is re-sliced."""
    active = truth.active
    rec = _empty_reconstruction(active, cfg)
    if active.size == 0:
        return rec
    for j in range(cfg.j):
        cols = active * cfg.n_t + truth.map_index[active, j]
        try:
            amps = lstsq(h[:, cols], y[:, j])
        except DegenerateSupportError:
            amps = _column_ls(h, cols, y[:, j])
        rec.x_hat[cols, j] = amps
        rec.map_index[:, j] = truth.map_index[active, j]
        rec.amplitude[:, j] = amps
    _decode_bits(rec, cfg)
    return rec


def zf_benchmark(cfg: model.SystemConfig, rng: np.random.Generator) -> tuple[int, int]:
    """Zero-forcing receiver for ``k_a`` known single-antenna 16-QAM users.

    Self-contained reference system at 4 bits per user per slot: draws its
    own CN(0,1) channel and noise at the configured SNR, inverts via LS and
    slices to the nearest constellation point.

    Returns ``(bit_errors, total_bits)`` over the frame.
    """
    qam_order, bits_per = 16, 4
    if cfg.k_a == 0:
        return 0, 0
    h = (rng.standard_normal((cfg.n_r, cfg.k_a)) + 1j * rng.standard_normal((cfg.n_r, cfg.k_a))) / np.sqrt(2)
    labels = rng.integers(0, qam_order, size=(cfg.k_a, cfg.j))
    x = model.qam_constellation(qam_order)[labels]
    sigma2 = cfg.noise_variance
    w = np.sqrt(sigma2 / 2) * (rng.standard_normal((cfg.n_r, cfg.j)) + 1j * rng.standard_normal((cfg.n_r, cfg.j)))
    y = h @ x + w
    try:
        x_hat = lstsq(h, y)
    except DegenerateSupportError:
        x_hat = np.stack([_column_ls(h, np.arange(cfg.k_a), y[:, j]) for j in range(cfg.j)], axis=1)
    sliced = model.qam_slice(x_hat, qam_order)
    errors = int(model.int_to_bits(labels ^ sliced, bits_per).sum())
    return errors, cfg.k_a * cfg.j * bits_per
