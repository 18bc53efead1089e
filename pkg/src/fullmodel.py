"""Two-photon transfer-matrix model of the detector.

Quadrature matrices are stacked along the leading axis, shape ``(N, 2, 2)`` for
N sideband frequencies, and vectors are ``(N, 2)``. Field names follow the
plant: ``a`` enters through the SE mirror, ``b`` leaves it, ``c``/``d`` run
inside the arm at the ITM, ``e`` arrives at the end mirror, ``n1``/``n2`` are
the SE-internal loss ports and ``v`` the end-mirror port.

Input and output quadratures are referenced to the carrier after one SE
transit, so the default ``zeta = pi/2`` reads the signal quadrature and
``phi_ext = 0`` squeezes it.
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar

from .errors import DegenerateReadoutError, NumericError
from .models import DetectorConfig, FilterCavity, ReadoutConfig

logger = logging.getLogger(__name__)

IDENTITY = np.eye(2)
Y = np.array([[0.0, -1.0], [1.0, 0.0]])

INPUT_PORT = "input_vacuum"
LOSS_PORT_1 = "se_internal_loss_1"
LOSS_PORT_2 = "se_internal_loss_2"
ARM_PORT = "arm_loss"
READOUT_PORT = "readout_loss"
VACUUM_PORTS = (INPUT_PORT, LOSS_PORT_1, LOSS_PORT_2, ARM_PORT)
NOISE_SOURCES = (*VACUUM_PORTS, READOUT_PORT)
SIGNAL = "signal"

SINGULAR_DETERMINANT = 1e-12
DEGENERATE_READOUT = 1e-12


def rot(phi: float) -> np.ndarray:
    cos, sin = math.cos(phi), math.sin(phi)
    return np.array([[cos, -sin], [sin, cos]])


def sqz(q: float) -> np.ndarray:
    return np.diag([math.exp(q), math.exp(-q)])


def prop(
    phi: float, psi: float, theta: float, q: float, omega, tau_se: float
) -> np.ndarray:
    """Single SE transit: rotate by psi, squeeze along theta, rotate by phi."""
    core = rot(phi) @ rot(theta) @ sqz(q) @ rot(-theta) @ rot(psi)
    phase = np.asarray(np.exp(1j * np.asarray(omega, dtype=float) * tau_se))
    return core * phase[..., None, None]


def inv2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjugate inverse of stacked 2x2 matrices; also returns the determinants."""
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    adj = np.empty_like(m)
    adj[..., 0, 0] = m[..., 1, 1]
    adj[..., 1, 1] = m[..., 0, 0]
    adj[..., 0, 1] = -m[..., 0, 1]
    adj[..., 1, 0] = -m[..., 1, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        return adj / det[..., None, None], det


def filter_angle(gamma_f: float, delta_f: float, omega) -> np.ndarray:
    if gamma_f <= 0:
        raise ValueError("filter-cavity half-width must be positive")
    omega = np.asarray(omega, dtype=float)
    return np.arctan2(2 * gamma_f * delta_f, gamma_f**2 - delta_f**2 + omega**2)


@dataclass(frozen=True)
class Mirrors:
    R_i: float
    T_i: float
    R_s: float
    T_s: float
    R_e: float
    T_e: float
    mu: float
    nu: float

    @classmethod
    def from_detector(cls, cfg: DetectorConfig) -> "Mirrors":
        return cls(
            R_i=math.sqrt(1 - cfg.t_itm),
            T_i=math.sqrt(cfg.t_itm),
            R_s=math.sqrt(1 - cfg.t_se),
            T_s=math.sqrt(cfg.t_se),
            R_e=math.sqrt(1 - cfg.t_etm),
            T_e=math.sqrt(cfg.t_etm),
            mu=math.sqrt(1 - cfg.se_loss),
            nu=math.sqrt(cfg.se_loss),
        )


@dataclass(frozen=True)
class SECavity:
    R_b: np.ndarray
    R_d: np.ndarray
    T_b: np.ndarray
    T_d: np.ndarray
    L_b1: np.ndarray
    L_b2: np.ndarray
    L_d1: np.ndarray
    L_d2: np.ndarray
    D_b: np.ndarray
    D_d: np.ndarray
    unstable: np.ndarray


@dataclass(frozen=True)
class ArmCavity:
    D_c: np.ndarray
    D_e: np.ndarray
    rotation: np.ndarray
    # maps from each input (and the displacement x) onto the field returning
    # to the ITM (c) and the field arriving at the end mirror (e)
    c_maps: dict[str, np.ndarray]
    e_maps: dict[str, np.ndarray]
    unstable: np.ndarray


@dataclass(frozen=True)
class PlantResponse:
    R: np.ndarray
    T: np.ndarray
    Z: np.ndarray
    L_b1: np.ndarray
    L_b2: np.ndarray
    se: SECavity
    arm: ArmCavity
    unstable: np.ndarray


@dataclass(frozen=True)
class BackAction:
    spring: np.ndarray
    s_ff: np.ndarray
    s_xf: np.ndarray
    chi_eff: np.ndarray
    chi_free: np.ndarray


@dataclass(frozen=True)
class HomodyneSpectra:
    s_x: np.ndarray
    s_xx: np.ndarray
    s_xf: np.ndarray
    s_ff: np.ndarray
    chi_eff: np.ndarray
    hz: np.ndarray
    unstable: np.ndarray


def carrier_vector(cfg: DetectorConfig) -> np.ndarray:
    angle = cfg.carrier_angle
    return math.sqrt(2 * cfg.photon_flux) * np.array([math.cos(angle), math.sin(angle)])


def threshold_squeeze_factor(cfg: DetectorConfig) -> float:
    """Single-pass q at which the amplified quadrature's SE round trip is lossless."""
    round_trip = math.sqrt(1 - cfg.t_se) * (1 - cfg.se_loss)
    if round_trip <= 0:
        return math.inf
    return -0.5 * math.log(round_trip)


def squeeze_for_gain(cfg: DetectorConfig, fraction: float) -> float:
    if fraction == 0:
        return 0.0
    return fraction * threshold_squeeze_factor(cfg)


def with_gain(cfg: DetectorConfig, fraction: float) -> DetectorConfig:
    return cfg.model_copy(update={"q": squeeze_for_gain(cfg, fraction)})


def se_cavity(cfg: DetectorConfig, omega) -> SECavity:
    omega = _check_omega(omega)
    m = Mirrors.from_detector(cfg)
    # A runs from the SE mirror to the ITM, B back again
    A = prop(cfg.phi_itm, cfg.phi_sem, cfg.theta, cfg.q, omega, cfg.tau_se)
    B = prop(cfg.phi_sem, cfg.phi_itm, cfg.theta, cfg.q, omega, cfg.tau_se)
    loop = m.R_i * m.R_s * m.mu**2

    D_b, det_b = inv2(IDENTITY + loop * B @ A)
    D_d, det_d = inv2(IDENTITY + loop * A @ B)
    unstable = (np.abs(det_b) < SINGULAR_DETERMINANT) | (
        np.abs(det_d) < SINGULAR_DETERMINANT
    )

    return SECavity(
        R_b=m.R_s * IDENTITY + m.R_i * m.T_s**2 * m.mu**2 * D_b @ B @ A,
        R_d=m.R_i * IDENTITY + m.R_s * m.T_i**2 * m.mu**2 * D_d @ A @ B,
        T_b=m.T_i * m.T_s * m.mu * D_b @ B,
        T_d=m.T_i * m.T_s * m.mu * D_d @ A,
        L_b1=-m.R_i * m.T_s * m.mu * m.nu * D_b @ B @ A,
        L_b2=m.T_s * m.nu * D_b,
        L_d1=m.T_i * m.nu * D_d @ A,
        L_d2=m.T_i * m.R_s * m.mu * m.nu * D_d @ A,
        D_b=D_b,
        D_d=D_d,
        unstable=unstable,
    )


def arm_cavity(cfg: DetectorConfig, omega, se: SECavity) -> ArmCavity:
    omega = _check_omega(omega)
    m = Mirrors.from_detector(cfg)
    O = rot(cfg.arm_detuning * cfg.tau_arm)
    e1 = np.exp(1j * omega * cfg.tau_arm)[..., None, None]
    e2 = e1**2
    YE = Y @ carrier_vector(cfg)

    D_c, det_c = inv2(IDENTITY - m.R_e * O @ O @ se.R_d * e2)
    D_e, det_e = inv2(IDENTITY - m.R_e * O @ se.R_d @ O * e2)
    unstable = (np.abs(det_c) < SINGULAR_DETERMINANT) | (
        np.abs(det_e) < SINGULAR_DETERMINANT
    )

    round_trip_c = m.R_e * D_c @ O @ O * e2
    c_maps = {
        INPUT_PORT: round_trip_c @ se.T_d,
        LOSS_PORT_1: round_trip_c @ se.L_d1,
        LOSS_PORT_2: round_trip_c @ se.L_d2,
        ARM_PORT: m.T_e * D_c @ O * e1,
        SIGNAL: 2 * cfg.wavenumber * m.R_e * (D_c @ O * e1) @ YE,
    }
    to_end = D_e @ O * e1
    e_maps = {
        INPUT_PORT: to_end @ se.T_d,
        LOSS_PORT_1: to_end @ se.L_d1,
        LOSS_PORT_2: to_end @ se.L_d2,
        ARM_PORT: m.T_e * D_e @ O @ se.R_d @ O * e2,
        SIGNAL: 2 * cfg.wavenumber * m.R_e * (D_e @ O @ se.R_d @ O * e2) @ YE,
    }
    return ArmCavity(
        D_c=D_c,
        D_e=D_e,
        rotation=O,
        c_maps=c_maps,
        e_maps=e_maps,
        unstable=unstable,
    )


def plant_output(cfg: DetectorConfig, omega) -> PlantResponse:
    omega = _check_omega(omega)
    se = se_cavity(cfg, omega)
    arm = arm_cavity(cfg, omega, se)

    unstable = se.unstable | arm.unstable | _above_threshold(cfg, omega)
    if np.any(unstable):
        logger.warning(
            "plant unstable at %d of %d frequencies", unstable.sum(), unstable.size
        )

    return PlantResponse(
        R=se.R_b - se.T_b @ arm.c_maps[INPUT_PORT],
        T=se.T_b @ arm.c_maps[ARM_PORT],
        Z=(se.T_b @ arm.c_maps[SIGNAL][..., None])[..., 0],
        L_b1=se.L_b1 + se.T_b @ arm.c_maps[LOSS_PORT_1],
        L_b2=se.L_b2 + se.T_b @ arm.c_maps[LOSS_PORT_2],
        se=se,
        arm=arm,
        unstable=unstable,
    )


def back_action(
    cfg: DetectorConfig, omega, plant: PlantResponse | None = None
) -> BackAction:
    omega = _check_positive(omega)
    if plant is None:
        plant = plant_output(cfg, omega)
    readout = ReadoutConfig.from_detector(cfg)
    rows = _port_rows(cfg, readout, omega, plant)
    hz = _readout_gain(readout, omega, cfg, plant)
    spring = _spring(cfg, plant)
    chi_free = -1 / (cfg.mass * omega**2)
    chi_eff = 1 / (1 / chi_free + spring)

    s_ff = np.zeros(omega.shape)
    cross = np.zeros(omega.shape, dtype=complex)
    for u, w in rows.values():
        s_ff += _norm2(w)
        cross += np.sum(u * w.conj(), axis=-1)
    s_xf = np.divide(cross, hz, out=np.zeros_like(cross), where=hz != 0)
    return BackAction(
        spring=spring, s_ff=s_ff, s_xf=s_xf, chi_eff=chi_eff, chi_free=chi_free
    )


def homodyne_psd(
    cfg: DetectorConfig,
    readout: ReadoutConfig,
    omega,
    *,
    ports: Iterable[str] | None = None,
) -> HomodyneSpectra:
    omega = _check_positive(omega)
    selected = _select_ports(ports)
    plant = plant_output(cfg, omega)
    hz = _readout_gain(readout, omega, cfg, plant)
    _require_signal(hz, plant.Z, omega)
    chi_eff = 1 / (-cfg.mass * omega**2 + _spring(cfg, plant))

    s_x = np.zeros(omega.shape)
    s_xx = np.zeros(omega.shape)
    s_ff = np.zeros(omega.shape)
    s_xf = np.zeros(omega.shape, dtype=complex)
    for name, (u, w) in _port_rows(cfg, readout, omega, plant).items():
        if name not in selected:
            continue
        u = u / hz[..., None]
        s_x += _norm2(u + chi_eff[..., None] * w)
        s_xx += _norm2(u)
        s_ff += _norm2(w)
        s_xf += np.sum(u * w.conj(), axis=-1)
    if READOUT_PORT in selected:
        readout_term = (1 - readout.eta) / readout.eta / np.abs(hz) ** 2
        s_x += readout_term
        s_xx += readout_term

    return HomodyneSpectra(
        s_x=s_x,
        s_xx=s_xx,
        s_xf=s_xf,
        s_ff=s_ff,
        chi_eff=chi_eff,
        hz=hz,
        unstable=plant.unstable,
    )


def strain_psd_full(
    cfg: DetectorConfig,
    readout: ReadoutConfig,
    omega,
    *,
    ports: Iterable[str] | None = None,
) -> np.ndarray:
    omega = _check_positive(omega)
    spectra = homodyne_psd(cfg, readout, omega, ports=ports)
    return strain_normalization(cfg, omega, spectra.chi_eff) * spectra.s_x


def strain_normalization(cfg: DetectorConfig, omega, chi_eff) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    phase = omega * cfg.tau_arm
    # zero response at multiples of the free spectral range
    blind = (phase > 0) & (np.abs(np.sin(phase)) < 1e-12 * phase)
    sinc = np.where(blind, 0.0, np.sinc(phase / np.pi))
    with np.errstate(divide="ignore"):
        return (
            4
            / (cfg.mass**2 * cfg.arm_length**2 * omega**4 * np.abs(chi_eff) ** 2)
            / sinc**2
        )


def _port_rows(
    cfg: DetectorConfig,
    readout: ReadoutConfig,
    omega: np.ndarray,
    plant: PlantResponse,
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Output row H^T X_p and force row for every vacuum port."""
    m = Mirrors.from_detector(cfg)
    H = _homodyne_vector(readout, omega, cfg)
    S_ext = _external_squeezer(readout, omega, cfg)
    force = hbar * cfg.wavenumber * carrier_vector(cfg)
    e_maps = plant.arm.e_maps

    def out_row(matrix: np.ndarray) -> np.ndarray:
        return (H[..., None, :] @ matrix)[..., 0, :]

    def force_row(matrix: np.ndarray) -> np.ndarray:
        return (1 + m.R_e**2) * force @ matrix

    return {
        INPUT_PORT: (
            out_row(-plant.R @ S_ext),
            force_row(e_maps[INPUT_PORT] @ S_ext),
        ),
        LOSS_PORT_1: (out_row(plant.L_b1), force_row(e_maps[LOSS_PORT_1])),
        LOSS_PORT_2: (out_row(plant.L_b2), force_row(e_maps[LOSS_PORT_2])),
        ARM_PORT: (
            out_row(plant.T),
            force_row(e_maps[ARM_PORT]) + m.R_e * m.T_e * force,
        ),
    }


def _spring(cfg: DetectorConfig, plant: PlantResponse) -> np.ndarray:
    m = Mirrors.from_detector(cfg)
    E = carrier_vector(cfg)
    k = cfg.wavenumber
    dynamic = hbar * k * (1 + m.R_e**2) * plant.arm.e_maps[SIGNAL] @ E
    static = 2 * hbar * k**2 * m.R_e**2 * E @ Y @ E
    return -(dynamic + static)


def _readout_gain(
    readout: ReadoutConfig, omega: np.ndarray, cfg: DetectorConfig, plant
) -> np.ndarray:
    H = _homodyne_vector(readout, omega, cfg)
    return np.sum(H * plant.Z, axis=-1)


def _homodyne_vector(
    readout: ReadoutConfig, omega: np.ndarray, cfg: DetectorConfig
) -> np.ndarray:
    angle = readout.zeta - _filter_rotation(readout.filters, "output", omega)
    angle = angle + cfg.se_phase
    return np.stack([np.cos(angle), np.sin(angle)], axis=-1)


def _external_squeezer(
    readout: ReadoutConfig, omega: np.ndarray, cfg: DetectorConfig
) -> np.ndarray:
    angle = readout.phi_ext + _filter_rotation(readout.filters, "input", omega)
    angle = np.broadcast_to(angle + cfg.se_phase, omega.shape)
    cos, sin = np.cos(angle), np.sin(angle)
    plus, minus = math.exp(readout.q_ext), math.exp(-readout.q_ext)
    S = np.empty((*omega.shape, 2, 2))
    S[..., 0, 0] = plus * cos**2 + minus * sin**2
    S[..., 1, 1] = plus * sin**2 + minus * cos**2
    S[..., 0, 1] = S[..., 1, 0] = (plus - minus) * cos * sin
    return S


def _filter_rotation(
    filters: list[FilterCavity], placement: str, omega: np.ndarray
) -> np.ndarray:
    total = np.zeros(omega.shape)
    for cavity in filters:
        if cavity.placement == placement:
            total = total + filter_angle(cavity.gamma, cavity.detuning, omega)
    return total


def _above_threshold(cfg: DetectorConfig, omega: np.ndarray) -> np.ndarray:
    """Spectral radius of the SE round trip, arm cavity included, reaching one."""
    m = Mirrors.from_detector(cfg)
    A = prop(cfg.phi_itm, cfg.phi_sem, cfg.theta, cfg.q, omega, cfg.tau_se)
    B = prop(cfg.phi_sem, cfg.phi_itm, cfg.theta, cfg.q, omega, cfg.tau_se)
    O = rot(cfg.arm_detuning * cfg.tau_arm)
    e2 = np.exp(2j * omega * cfg.tau_arm)[..., None, None]
    D_arm, _ = inv2(IDENTITY - m.R_i * m.R_e * O @ O * e2)
    arm_reflection = -m.R_i * IDENTITY + m.T_i**2 * m.R_e * D_arm @ O @ O * e2
    loop = m.R_s * m.mu**2 * A @ B @ arm_reflection

    trace = loop[..., 0, 0] + loop[..., 1, 1]
    det = loop[..., 0, 0] * loop[..., 1, 1] - loop[..., 0, 1] * loop[..., 1, 0]
    root = np.sqrt(trace**2 / 4 - det)
    radius = np.maximum(np.abs(trace / 2 + root), np.abs(trace / 2 - root))
    return ~np.isfinite(radius) | (radius >= 1)


def _require_signal(hz: np.ndarray, Z: np.ndarray, omega: np.ndarray) -> None:
    scale = np.sqrt(_norm2(Z))
    blind = ~(np.abs(hz) > DEGENERATE_READOUT * scale)
    if np.any(blind):
        index = int(np.argmax(blind))
        raise DegenerateReadoutError(
            "homodyne angle is blind to the signal",
            frequency_hz=float(omega[index] / (2 * np.pi)),
        )


def _norm2(rows: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(rows) ** 2, axis=-1)


def _select_ports(ports: Iterable[str] | None) -> frozenset[str]:
    if ports is None:
        return frozenset(NOISE_SOURCES)
    selected = frozenset(ports)
    unknown = selected - set(NOISE_SOURCES)
    if unknown:
        raise ValueError(f"unknown noise sources: {sorted(unknown)}")
    return selected


def _check_omega(omega) -> np.ndarray:
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega < 0):
        raise ValueError("sideband frequencies must be non-negative")
    return omega


def _check_positive(omega) -> np.ndarray:
    omega = _check_omega(omega)
    if np.any(omega == 0):
        raise NumericError(
            "free-mass susceptibility diverges at zero frequency", frequency_hz=0.0
        )
    return omega
