"""Nuclear-spin localization from orientation-dependent couplings.

The forward model maps a candidate nuclear position (spherical coordinates
in the crystal frame, ``(x, y, z) = (D1, D2, b)``; polar angle from the b
axis, azimuth from D1) through the anisotropic electron g-tensor to the
secular coupling parameters, and on to the three observables measured per
magnetic-field orientation: mean precession frequency, difference frequency
magnitude, and conditional rotation angle per pulse.  A chi-square over all
orientations, with model uncertainties propagated from the field calibration
by Monte Carlo, is minimized over position.

The package ships three data files (JSON, user-overridable):

- ``g_tensors.json``   ground/excited electron g-tensors,
- ``field_settings.json``  the four field orientations and the calibrated
  first-order field correction with its uncertainties,
- ``observations.json``   the twelve measured observables with errors.

The shipped g-tensors are representative: principal magnitudes follow the
published site values for this host, and the orientation is calibrated so
the forward model reproduces this register's measured couplings at the
fitted position.  Quantitative crystallographic assignment needs the
tabulated literature tensors dropped in via the same schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from importlib import resources

import numpy as np
from scipy import constants as _const
from scipy.optimize import brentq, minimize

from . import hyperfine as hf
from .qmat import DomainError

__all__ = [
    "FieldCorrection",
    "FieldSetting",
    "GTensor",
    "LocalizeResult",
    "Observation",
    "Position",
    "SearchRegion",
    "NUCLEAR_G_FACTORS",
    "GAMMA_HYDROGEN",
    "chi_square",
    "default_search_region",
    "dipolar_hyperfine",
    "dipolar_shift",
    "direction",
    "gyromagnetic_estimate",
    "hyperfine_from_observables",
    "iso_ratio_contour",
    "load_field_settings",
    "load_g_tensors",
    "load_observations",
    "localize",
    "model_observables",
    "monte_carlo_sigma",
]

_MU0 = _const.mu_0
_MUB = _const.value("Bohr magneton")
_MUN = _const.value("nuclear magneton")
_H = _const.h
_HBAR = _const.hbar
_KHZ = 2.0 * np.pi * 1e3

GAMMA_HYDROGEN = 42.577478461e6   # Hz/T

# nuclear g-factors (mu = g * mu_N * I), standard table values
NUCLEAR_G_FACTORS = {
    "H1": 5.58569468,
    "Si29": -1.11058,
    "Y89": -0.2748308,
    "P31": 2.26320,
    "Cd111": -1.189772,
    "Cd113": -1.244602,
}


def reference_position() -> "Position":
    """Fitted proton position for the shipped dataset (positive-branch)."""
    return Position(20.0, 66.7, 49.6)


def direction(theta_deg: float, phi_deg: float) -> np.ndarray:
    """Unit vector in the crystal frame; polar angle from +z (b axis)."""
    t, ph = np.radians(theta_deg), np.radians(phi_deg)
    return np.array([np.sin(t) * np.cos(ph), np.sin(t) * np.sin(ph),
                     np.cos(t)])


@dataclass(frozen=True)
class GTensor:
    matrix: np.ndarray
    label: str = "ground"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise DomainError("g-tensor must be a finite 3x3 matrix")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def effective_g(self, bhat: np.ndarray) -> float:
        return float(np.linalg.norm(self.matrix @ bhat))


@dataclass(frozen=True)
class FieldCorrection:
    """First-order field correction (means) with 1-sigma uncertainties."""

    db_gauss: float = 3.99
    dtheta_deg: float = 0.89
    dphi_deg: float = 0.79
    db_sigma_gauss: float = 0.76
    dtheta_sigma_deg: float = 0.34
    dphi_sigma_deg: float = 0.44


@dataclass(frozen=True)
class FieldSetting:
    b_gauss: float
    theta_deg: float
    phi_deg: float
    correction: FieldCorrection = dc_field(default_factory=FieldCorrection)

    def __post_init__(self):
        if self.b_gauss <= 0:
            raise DomainError("field magnitude must be positive")

    def corrected(self, db: float | None = None, dth: float | None = None,
                  dph: float | None = None) -> tuple[float, np.ndarray]:
        """(B in tesla, unit direction) after the first-order correction."""
        c = self.correction
        b = (self.b_gauss + (c.db_gauss if db is None else db)) * 1e-4
        bhat = direction(self.theta_deg + (c.dtheta_deg if dth is None else dth),
                         self.phi_deg + (c.dphi_deg if dph is None else dph))
        return b, bhat


@dataclass(frozen=True)
class Observation:
    """Measured (omega0, |omega_delta|, alpha) with 1-sigma errors.

    Frequencies are angular rad/s, the rotation angle is in radians.
    """

    omega0: float
    omega0_err: float
    omega_delta: float
    omega_delta_err: float
    alpha: float
    alpha_err: float

    def __post_init__(self):
        if min(self.omega0_err, self.omega_delta_err, self.alpha_err) <= 0:
            raise DomainError("observation errors must be positive")

    def values(self) -> np.ndarray:
        return np.array([self.omega0, self.omega_delta, self.alpha])

    def errors(self) -> np.ndarray:
        return np.array([self.omega0_err, self.omega_delta_err,
                         self.alpha_err])


@dataclass(frozen=True)
class Position:
    r_angstrom: float
    theta_deg: float
    phi_deg: float

    def __post_init__(self):
        if self.r_angstrom <= 0:
            raise DomainError("radius must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.r_angstrom, self.theta_deg, self.phi_deg])


# ---------------------------------------------------------------------------
# data files

def _load_json(path, default_name: str):
    if path is not None:
        with open(path) as f:
            return json.load(f)
    ref = resources.files("spinforge").joinpath(f"data/{default_name}")
    return json.loads(ref.read_text())


def load_g_tensors(path=None) -> dict[str, GTensor]:
    raw = _load_json(path, "g_tensors.json")
    out = {}
    for label in ("ground", "excited"):
        out[label] = GTensor(np.array(raw[label]), label)
    return out


def load_field_settings(path=None) -> list[FieldSetting]:
    raw = _load_json(path, "field_settings.json")
    corr = FieldCorrection(**raw["correction"])
    return [FieldSetting(s["b_gauss"], s["theta_deg"], s["phi_deg"], corr)
            for s in raw["settings"]]


def load_observations(path=None) -> list[Observation]:
    raw = _load_json(path, "observations.json")
    out = []
    for row in raw["observations"]:
        out.append(Observation(
            row["omega0_khz"] * _KHZ, row["omega0_err_khz"] * _KHZ,
            row["omega_delta_khz"] * _KHZ, row["omega_delta_err_khz"] * _KHZ,
            np.radians(row["alpha_deg"]), np.radians(row["alpha_err_deg"])))
    return out


# ---------------------------------------------------------------------------
# forward model

def dipolar_hyperfine(pos: Position, g: GTensor, fieldset: FieldSetting,
                      gamma_n: float = GAMMA_HYDROGEN) -> hf.HyperfineParams:
    """Point-dipole secular coupling parameters at a candidate position.

    The electron quantization axis is ``g^T bhat / |g^T bhat|`` and the
    nuclear axis is the field direction; the secular coefficients follow
    from the anticommutator projections of the dipole Hamiltonian, with the
    in-plane gauge fixed so the perpendicular coupling is nonnegative.
    """
    if pos.r_angstrom < 0.5:
        raise DomainError("point-dipole model invalid below 0.5 angstrom")
    r = pos.r_angstrom * 1e-10
    rhat = direction(pos.theta_deg, pos.phi_deg)
    b_tesla, bhat = fieldset.corrected()
    gmat = g.matrix
    u_e = gmat.T @ bhat
    u_e = u_e / np.linalg.norm(u_e)
    # prefactor / hbar, angular rad/s; nuclear moment via gamma_n
    k = (_MU0 / (4 * np.pi)) * _MUB * (gamma_n * _H) / (r ** 3 * _HBAR)
    avec = -k * ((np.eye(3) - 3.0 * np.outer(rhat, rhat)) @ (gmat @ u_e))
    a_par = 0.5 * float(np.dot(avec, bhat))
    a_perp = 0.5 * float(np.linalg.norm(avec - np.dot(avec, bhat) * bhat))
    omega_l = 2.0 * np.pi * gamma_n * b_tesla
    return hf.HyperfineParams(a_par, a_perp, omega_l)


def model_observables(pos: Position, g: GTensor, fieldset: FieldSetting,
                      gamma_n: float = GAMMA_HYDROGEN,
                      db=None, dth=None, dph=None) -> np.ndarray:
    """(omega0, |omega_delta|, alpha) predicted at a position and setting.

    The rotation angle is evaluated with the exact block algebra at the
    setting's refined resonance spacing.  Optional field-correction
    overrides support the Monte-Carlo propagation.
    """
    if db is not None or dth is not None or dph is not None:
        c = fieldset.correction
        fieldset = FieldSetting(
            fieldset.b_gauss, fieldset.theta_deg, fieldset.phi_deg,
            FieldCorrection(
                c.db_gauss if db is None else db,
                c.dtheta_deg if dth is None else dth,
                c.dphi_deg if dph is None else dph,
                c.db_sigma_gauss, c.dtheta_sigma_deg, c.dphi_sigma_deg))
    params = dipolar_hyperfine(pos, g, fieldset, gamma_n)
    _, _, cp = hf.conditional_hamiltonians(params)
    tau0 = 0.5 * hf.resonance_times(params, 0, refine=True)[0]
    alpha = hf.dd_block(params, tau0).alpha
    return np.array([cp.omega_0, abs(cp.omega_delta), alpha])


def hyperfine_from_observables(omega0: float, omega_delta_abs: float,
                               alpha: float) -> hf.HyperfineParams:
    """Invert (omega0, |omega_delta|, alpha) to (|a_par|, a_perp, omega_l).

    Uses the exact relations ``omega_pm = omega0 +- omega_delta`` and solves
    the perpendicular coupling from the exact block rotation angle.
    """
    wp = omega0 + omega_delta_abs
    wm = omega0 - omega_delta_abs

    def mismatch(a_perp):
        p = _params_from_wpm(wp, wm, a_perp)
        tau0 = 0.5 * hf.resonance_times(p, 0, refine=True)[0]
        return hf.dd_block(p, tau0).alpha - alpha

    hi = 0.95 * np.sqrt(wp * wm)
    a_perp = brentq(mismatch, 1e-6 * omega0, hi, xtol=1e-9 * omega0)
    return _params_from_wpm(wp, wm, a_perp)


def _params_from_wpm(wp: float, wm: float, a_perp: float) -> hf.HyperfineParams:
    # omega_pm^2 = (omega_l +- a_par)^2 + a_perp^2
    sp = np.sqrt(max(wp ** 2 - a_perp ** 2, 0.0))
    sm = np.sqrt(max(wm ** 2 - a_perp ** 2, 0.0))
    omega_l = 0.5 * (sp + sm)
    a_par = 0.5 * (sp - sm)
    return hf.HyperfineParams(a_par, a_perp, omega_l)


# ---------------------------------------------------------------------------
# chi-square machinery

def _stack_observations(observations) -> tuple[np.ndarray, np.ndarray]:
    vals = np.concatenate([o.values() for o in observations])
    errs = np.concatenate([o.errors() for o in observations])
    return vals, errs


def _model_vector(pos: Position, settings, g: GTensor,
                  gamma_n: float = GAMMA_HYDROGEN) -> np.ndarray:
    return np.concatenate([model_observables(pos, g, s, gamma_n)
                           for s in settings])


def chi_square(pos: Position, observations, settings, g: GTensor,
               sigma_model=None, gamma_n: float = GAMMA_HYDROGEN) -> float:
    """Sum of squared residuals weighted by observation and model variances."""
    if len(observations) != len(settings):
        raise DomainError("one observation row per field setting required")
    obs, err = _stack_observations(observations)
    if sigma_model is None:
        sigma_model = np.zeros_like(obs)
    sigma_model = np.asarray(sigma_model, dtype=float)
    model = _model_vector(pos, settings, g, gamma_n)
    return float(np.sum((obs - model) ** 2 / (err ** 2 + sigma_model ** 2)))


def monte_carlo_sigma(pos: Position, settings, g: GTensor,
                      n_samples: int = 10000, seed: int = 0,
                      gamma_n: float = GAMMA_HYDROGEN) -> np.ndarray:
    """Model uncertainty from the field-correction uncertainties.

    Samples the correction triple from independent normals with the stated
    1-sigma widths, recomputes the model observables at ``pos``, and returns
    the per-point sample standard deviations (deterministic per seed).
    """
    if n_samples < 100:
        raise DomainError("n_samples must be >= 100")
    rng = np.random.default_rng(seed)
    samples = np.empty((n_samples, 3 * len(settings)))
    for i in range(n_samples):
        row = []
        for s in settings:
            c = s.correction
            db = rng.normal(c.db_gauss, c.db_sigma_gauss)
            dth = rng.normal(c.dtheta_deg, c.dtheta_sigma_deg)
            dph = rng.normal(c.dphi_deg, c.dphi_sigma_deg)
            row.append(model_observables(pos, g, s, gamma_n, db, dth, dph))
        samples[i] = np.concatenate(row)
    return samples.std(axis=0)


@dataclass(frozen=True)
class SearchRegion:
    r_angstrom: tuple = (14.0, 26.0)
    theta_deg: tuple = (30.0, 100.0)
    phi_deg: tuple = (10.0, 90.0)


def default_search_region() -> SearchRegion:
    return SearchRegion()


@dataclass(frozen=True)
class LocalizeResult:
    position: Position
    chi2_min: float
    reduced_chi2: float
    sign_a_par: int
    sigma_model: np.ndarray
    converged: bool
    n_model_evaluations: int


def localize(observations, settings, g: GTensor, sign_a_par: int = +1,
             search_region: SearchRegion | None = None, seed: int = 0,
             n_mc: int = 10000, coarse_steps=(2.0, 5.0, 5.0),
             gamma_n: float = GAMMA_HYDROGEN) -> LocalizeResult:
    """Coarse grid scan plus Nelder-Mead refinement of the position fit.

    ``sign_a_par`` selects the branch by the sign of the parallel coupling
    at the first field setting (the difference-frequency measurement leaves
    it undetermined).  Model sigmas are evaluated once, at the coarse-scan
    minimum, with ``n_mc`` Monte-Carlo samples.
    """
    if search_region is None:
        search_region = default_search_region()
    if sign_a_par not in (+1, -1):
        raise DomainError("sign_a_par must be +1 or -1")
    n_eval = 0

    def sign_ok(pos: Position) -> bool:
        a_par = dipolar_hyperfine(pos, g, settings[0], gamma_n).a_par
        return np.sign(a_par) == sign_a_par

    # coarse scan with observation errors only
    rr = np.arange(search_region.r_angstrom[0],
                   search_region.r_angstrom[1] + 1e-9, coarse_steps[0])
    tt = np.arange(search_region.theta_deg[0],
                   search_region.theta_deg[1] + 1e-9, coarse_steps[1])
    pp = np.arange(search_region.phi_deg[0],
                   search_region.phi_deg[1] + 1e-9, coarse_steps[2])
    best = None
    for r in rr:
        for th in tt:
            for ph in pp:
                pos = Position(r, th, ph)
                if not sign_ok(pos):
                    continue
                c = chi_square(pos, observations, settings, g, None, gamma_n)
                n_eval += len(settings)
                if best is None or c < best[0]:
                    best = (c, pos)
    if best is None:
        raise DomainError("no grid point with the requested coupling sign")

    sigma_model = monte_carlo_sigma(best[1], settings, g, n_mc, seed, gamma_n)
    n_eval += n_mc * len(settings)

    big = 1e12

    def objective(x):
        r, th, ph = x
        if not (search_region.r_angstrom[0] - 2 <= r
                <= search_region.r_angstrom[1] + 2) or r < 0.6:
            return big
        pos = Position(r, th, ph)
        if not sign_ok(pos):
            return big
        return chi_square(pos, observations, settings, g, sigma_model,
                          gamma_n)

    res = minimize(objective, best[1].as_array(), method="Nelder-Mead",
                   options={"xatol": 1e-4, "fatol": 1e-8, "maxiter": 4000})
    n_eval += res.nfev * len(settings)
    pos = Position(*res.x)
    nu = 3 * len(settings) - 3
    return LocalizeResult(pos, float(res.fun), float(res.fun) / nu,
                          sign_a_par, sigma_model, bool(res.success), n_eval)


# ---------------------------------------------------------------------------
# auxiliary estimates

def gyromagnetic_estimate(omega_l_values, b_values_tesla
                          ) -> tuple[float, float]:
    """Least-squares slope of precession frequency versus field, through the
    origin.  Inputs are angular rad/s and tesla; returns (Hz/T, 1-sigma).
    """
    w = np.asarray(omega_l_values, dtype=float) / (2.0 * np.pi)
    b = np.asarray(b_values_tesla, dtype=float)
    if len(w) < 2 or len(w) != len(b):
        raise DomainError("need at least two (omega_l, B) pairs")
    slope = float(np.dot(w, b) / np.dot(b, b))
    resid = w - slope * b
    dof = len(w) - 1
    sigma = float(np.sqrt(np.sum(resid ** 2) / dof / np.dot(b, b)))
    return slope, sigma


def dipolar_shift(r_angstrom: float, theta_deg: float, g1: float,
                  g2: float) -> float:
    """Nucleus-nucleus point-dipole frequency shift in ordinary Hz.

    ``A = (mu0 mu_N^2 g1 g2 / 8 pi r^3) (1 - 3 cos^2 theta) / h`` with
    ``theta`` the angle between the internuclear vector and the field.
    Symmetric in g1/g2 and zero at the magic angle.
    """
    if r_angstrom <= 0:
        raise DomainError("separation must be positive")
    r = r_angstrom * 1e-10
    cos2 = np.cos(np.radians(theta_deg)) ** 2
    energy = 0.5 * (_MU0 * _MUN ** 2 * g1 * g2 / (4 * np.pi * r ** 3)
                    * (1.0 - 3.0 * cos2))
    return float(energy / _H)


def iso_ratio_contour(g: GTensor, fieldset: FieldSetting, ratio: float,
                      theta_grid_deg=None,
                      gamma_n: float = GAMMA_HYDROGEN) -> np.ndarray:
    """Directions where the parallel/perpendicular coupling ratio matches.

    Returns an array of (theta_deg, phi_deg) rows: for each polar angle the
    azimuths where ``a_par / a_perp`` crosses the target ratio (the ratio
    depends only on direction).  Polylines from different settings intersect
    at the fitted position.
    """
    if theta_grid_deg is None:
        theta_grid_deg = np.arange(1.0, 180.0, 1.0)
    rows = []

    def ratio_at(th, ph):
        p = dipolar_hyperfine(Position(20.0, th, ph), g, fieldset, gamma_n)
        return p.a_par / max(p.a_perp, 1e-30)

    phis = np.arange(0.0, 360.0 + 1e-9, 2.0)
    for th in theta_grid_deg:
        vals = np.array([ratio_at(th, ph) - ratio for ph in phis])
        for i in range(len(phis) - 1):
            if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) \
                    and vals[i] * vals[i + 1] < 0:
                ph_root = brentq(lambda ph: ratio_at(th, ph) - ratio,
                                 phis[i], phis[i + 1], xtol=1e-6)
                rows.append((th, ph_root))
    return np.array(rows)
