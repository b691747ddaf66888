"""Continuous dynamics: RK4 integration, the CSTR plant, hazard timing.

The reactor model is a standard first-order exothermic CSTR with four
balances over ``(L, T, T_J, C_A)``:

    A dL/dt      = s_in F0 - s_out F L/L_n
    dC_A/dt      = s_in F0/(A L) (C_A0 - C_A) - k(T) C_A
    dT/dt        = s_in F0/(A L) (T0 - T) + lam k(T) C_A / rho_cp
                   - UA (T - T_J) / (rho_cp V)
    dT_J/dt      = s_J F_J/V_J (T_J0 - T_J) + UA (L/L_n)(T - T_J) / (rho_J c_J V_J)

with ``k(T) = k0 exp(-E_over_R / T)``, nominal level ``L_n = V / A`` and
stream switches ``s_in, s_out, s_J`` in {0, 1}.  The outlet valve passes a
flow proportional to level and the wetted jacket area scales with level, so
draining modes relax smoothly instead of emptying the vessel in finite time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .automaton import Envelope, HybridAutomaton, Mode
from .errors import NonFiniteState

DEFAULT_DT = 0.01


class FlowFunction(Protocol):
    def __call__(self, t: float, z: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    mode: str = ""
    names: tuple[str, ...] = ()

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def integrate(
    flow: FlowFunction,
    x0: Sequence[float],
    horizon: float,
    dt: float = DEFAULT_DT,
    mode: str = "",
    names: Sequence[str] = (),
) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta over ``[0, horizon]``.

    The grid is ``t_i = i * dt``; when ``horizon`` is not a multiple of ``dt``
    the last step overshoots it by less than one step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if horizon < dt:
        raise ValueError("horizon must be at least one step")
    n = int(math.ceil(horizon / dt - 1e-9))
    z = np.asarray(x0, dtype=float).copy()
    if not np.all(np.isfinite(z)):
        raise NonFiniteState("initial state is not finite", None)
    states = np.empty((n + 1, z.size))
    states[0] = z
    h2 = dt / 2.0
    h6 = dt / 6.0
    for i in range(n):
        t = i * dt
        k1 = np.asarray(flow(t, z), dtype=float)
        k2 = np.asarray(flow(t + h2, z + h2 * k1), dtype=float)
        k3 = np.asarray(flow(t + h2, z + h2 * k2), dtype=float)
        k4 = np.asarray(flow(t + dt, z + dt * k3), dtype=float)
        z = z + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise NonFiniteState(f"state became non-finite after t={t:g}", t)
        states[i + 1] = z
    times = np.arange(n + 1) * dt
    return Trajectory(times, states, mode, tuple(names))


@dataclass(frozen=True)
class CstrParams:
    inlet_flow: float  # F0, m3/min (nominal; the level loop overrides it)
    inlet_concentration: float  # C_A0, kmol/m3
    inlet_temperature: float  # T0, K
    reactor_volume: float  # V, m3 at nominal level
    vessel_cross_section: float  # A, m2
    outlet_flow: float  # F, m3/min at nominal level
    pre_exponential: float  # k0, 1/min
    activation_ratio: float  # E/R, K
    heat_of_reaction: float  # lam, kJ/kmol, positive = exothermic
    density_heat_capacity: float  # rho c_p, kJ/(m3 K)
    jacket_volume: float  # V_J, m3
    jacket_inlet_temperature: float  # T_J0, K
    jacket_flow: float  # F_J0, m3/min (nominal; the temperature loop overrides it)
    jacket_density_heat_capacity: float  # rho_J c_J, kJ/(m3 K)
    heat_transfer: float  # UA, kJ/(min K)

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"CstrParams.{name} must be finite and > 0, got {value!r}")

    @property
    def nominal_level(self) -> float:
        return self.reactor_volume / self.vessel_cross_section

    def rate_constant(self, T: float) -> float:
        return self.pre_exponential * math.exp(-self.activation_ratio / T)


@dataclass(frozen=True)
class PidParams:
    """One PID loop in positional form.

    ``measured`` names the process variable (``"T"`` or ``"L"``); the
    temperature loop drives the jacket flow and the level loop the inlet flow.
    A negative ``gain`` gives reverse action (more coolant when T is high).
    """

    measured: str
    gain: float
    integral_time: float
    derivative_time: float
    setpoint: float
    output_limits: tuple[float, float]
    manipulated_switchable: bool = True

    def __post_init__(self):
        object.__setattr__(self, "output_limits", tuple(float(x) for x in self.output_limits))
        if self.measured not in _LOOPS:
            raise ValueError(f"no CSTR loop measures {self.measured!r}")
        if not self.integral_time > 0:
            raise ValueError("integral_time must be > 0")
        if self.derivative_time < 0:
            raise ValueError("derivative_time must be >= 0")
        lo, hi = self.output_limits
        if not lo < hi:
            raise ValueError("output_limits must satisfy min < max")

    @property
    def manipulated(self) -> str:
        return _LOOPS[self.measured]


# measured variable -> stream switch it manipulates
_LOOPS = {"T": "coolant", "L": "inlet"}
CSTR_VARIABLES = ("L", "T", "T_J", "C_A")
CSTR_SWITCHES = ("inlet", "outlet", "coolant")


class CstrFlow:
    """Right-hand side of the CSTR in one mode, with optional PID loops.

    The state is the four process variables followed by one integral term per
    controller (``I_T``, ``I_L``), expressed in output units.  ``augment``
    extends a process state with integral terms equal to the nominal flows,
    which gives a bumpless start.  Loops on a closed stream hold their integral
    when ``manipulated_switchable`` is set.  The derivative term acts on the
    measurement, using the plant rate evaluated at the P+I output.
    """

    def __init__(self, params: CstrParams, mode: Mode, controllers: Sequence[PidParams] = ()):
        switches = mode.switches
        missing = [s for s in CSTR_SWITCHES if s not in switches]
        if missing:
            raise ValueError(f"mode {mode.id} lacks CSTR switches {missing}")
        seen = [c.measured for c in controllers]
        if len(set(seen)) != len(seen):
            raise ValueError("at most one controller per measured variable")
        self.params = params
        self.mode = mode
        self.s_in = float(switches["inlet"])
        self.s_out = float(switches["outlet"])
        self.s_j = float(switches["coolant"])
        self.controllers = tuple(sorted(controllers, key=lambda c: ("T", "L").index(c.measured)))
        self.state_names = CSTR_VARIABLES + tuple(f"I_{c.measured}" for c in self.controllers)

    def augment(self, x0: Sequence[float]) -> np.ndarray:
        x0 = list(x0)
        if len(x0) == len(self.state_names):
            return np.asarray(x0, dtype=float)
        nominal = {"T": self.params.jacket_flow, "L": self.params.inlet_flow}
        return np.asarray(x0 + [nominal[c.measured] for c in self.controllers], dtype=float)

    def _process(self, L, T, TJ, CA, f_in, f_j):
        p = self.params
        vol = p.vessel_cross_section * L
        k = p.pre_exponential * math.exp(-p.activation_ratio / T)
        frac = L / p.nominal_level
        q_in = self.s_in * f_in
        exch = p.heat_transfer * (T - TJ)
        dL = (q_in - self.s_out * p.outlet_flow * frac) / p.vessel_cross_section
        if q_in != 0.0:
            dCA = q_in / vol * (p.inlet_concentration - CA) - k * CA
            dT = q_in / vol * (p.inlet_temperature - T)
        else:
            dCA = -k * CA
            dT = 0.0
        dT += p.heat_of_reaction * k * CA / p.density_heat_capacity - exch / (
            p.density_heat_capacity * p.reactor_volume
        )
        dTJ = self.s_j * f_j / p.jacket_volume * (p.jacket_inlet_temperature - TJ) + exch * frac / (
            p.jacket_density_heat_capacity * p.jacket_volume
        )
        return dL, dT, dTJ, dCA

    def __call__(self, t: float, z) -> np.ndarray:
        zs = z.tolist() if isinstance(z, np.ndarray) else list(z)
        L, T, TJ, CA = zs[:4]
        if not (L > 0.0 and T > 0.0):
            return np.full(len(zs), np.nan)
        p = self.params
        flows = {"T": p.jacket_flow, "L": p.inlet_flow}
        active = {"T": self.s_j > 0, "L": self.s_in > 0}
        meas = {"T": T, "L": L}
        outs = {}
        for c, integ in zip(self.controllers, zs[4:]):
            e = c.setpoint - meas[c.measured]
            u = integ + c.gain * e
            outs[c.measured] = (c, e, u)
            flows[c.measured] = min(max(u, c.output_limits[0]), c.output_limits[1])
        rates = self._process(L, T, TJ, CA, flows["L"], flows["T"])
        if any(c.derivative_time > 0 for c in self.controllers):
            rate_of = {"L": rates[0], "T": rates[1]}
            for m, (c, e, u) in outs.items():
                if c.derivative_time > 0:
                    u = u - c.gain * c.derivative_time * rate_of[m]
                    outs[m] = (c, e, u)
                    flows[m] = min(max(u, c.output_limits[0]), c.output_limits[1])
            rates = self._process(L, T, TJ, CA, flows["L"], flows["T"])
        dints = []
        for c in self.controllers:
            _, e, u = outs[c.measured]
            d = c.gain / c.integral_time * e
            lo, hi = c.output_limits
            if (c.manipulated_switchable and not active[c.measured]) or (u > hi and d > 0) or (u < lo and d < 0):
                d = 0.0
            dints.append(d)
        return np.array(list(rates) + dints)


class LinearFlow:
    """Affine flow ``dx/dt = M x + b``; useful for closed-form checks."""

    def __init__(self, matrix: Sequence[Sequence[float]], offset: Sequence[float] | None = None):
        self.matrix = np.asarray(matrix, dtype=float)
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n):
            raise ValueError("flow matrix must be square")
        self.offset = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
        if self.offset.shape != (n,):
            raise ValueError("offset length must match the matrix")

    def __call__(self, t: float, z) -> np.ndarray:
        return self.matrix @ np.asarray(z, dtype=float) + self.offset


def cstr_flow(params: CstrParams, mode: Mode, controllers: Sequence[PidParams] = ()) -> CstrFlow:
    return CstrFlow(params, mode, controllers)


def augment(flow, x0: Sequence[float]) -> np.ndarray:
    """Full integration state for ``flow`` starting from process state ``x0``."""
    if hasattr(flow, "augment"):
        return flow.augment(x0)
    return np.asarray(x0, dtype=float)


def state_names(flow, process_names: Sequence[str]) -> tuple[str, ...]:
    return tuple(getattr(flow, "state_names", process_names))


@dataclass(frozen=True)
class HybridSystem:
    """Automaton plus the flow factories its modes refer to by name."""

    automaton: HybridAutomaton
    flows: Mapping[str, Callable[[Mode], FlowFunction]] = field(default_factory=dict)

    def flow(self, mode: Mode | str) -> FlowFunction:
        m = self.automaton.mode(mode)
        try:
            factory = self.flows[m.flow_ref]
        except KeyError:
            raise KeyError(f"mode {m.id}: flow {m.flow_ref!r} is not registered") from None
        return factory(m)


def cstr_system(
    automaton: HybridAutomaton, params: CstrParams, controllers: Sequence[PidParams] = (), name: str = "cstr"
) -> HybridSystem:
    if automaton.variable_names != CSTR_VARIABLES:
        raise ValueError(f"CSTR flow needs variables {CSTR_VARIABLES}, got {automaton.variable_names}")
    controllers = tuple(controllers)
    return HybridSystem(automaton, {name: lambda m: CstrFlow(params, m, controllers)})


def simulate(
    system: HybridSystem,
    mode: Mode | str,
    horizon: float,
    dt: float = DEFAULT_DT,
    x0: Sequence[float] | None = None,
) -> Trajectory:
    m = system.automaton.mode(mode)
    flow = system.flow(m)
    x0 = system.automaton.init_state if x0 is None else x0
    names = state_names(flow, system.automaton.variable_names)
    return integrate(flow, augment(flow, x0), horizon, dt, m.id, names)


def steady_state(flow: FlowFunction, guess: Sequence[float], tol: float = 1e-12) -> np.ndarray:
    """Root of ``flow(0, z) = 0`` near ``guess`` (scipy hybrid Powell)."""
    from scipy.optimize import root

    sol = root(lambda z: flow(0.0, z), np.asarray(guess, dtype=float), tol=tol)
    if not sol.success:
        raise RuntimeError(f"steady state not found: {sol.message}")
    return sol.x


@dataclass(frozen=True)
class HazardVerdict:
    hazardous: bool
    crossing_time: float | None = None
    violated_variable: str | None = None
    crossing_value: float | None = None

    def __post_init__(self):
        flags = {self.hazardous, self.crossing_time is not None, self.violated_variable is not None}
        if len(flags) != 1:
            raise ValueError("hazardous, crossing_time and violated_variable must agree")


def _hermite(y0, y1, d0, d1, h, s):
    u = s / h
    u2 = u * u
    u3 = u2 * u
    return (
        (2 * u3 - 3 * u2 + 1) * y0
        + (u3 - 2 * u2 + u) * h * d0
        + (-2 * u3 + 3 * u2) * y1
        + (u3 - u2) * h * d1
    )


def hazard_time(
    system: HybridSystem,
    mode: Mode | str,
    x0: Sequence[float] | None,
    envelope: Envelope,
    horizon: float,
    dt: float = DEFAULT_DT,
) -> HazardVerdict:
    """Earliest envelope excursion of ``mode``'s dynamics started at ``x0``.

    The first grid step that ends outside the envelope is refined by
    bisection on a cubic Hermite interpolant (slopes from the flow) down to
    ``dt / 100``.  ``x0=None`` uses the automaton's initial state.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    aut = system.automaton
    m = aut.mode(mode)
    x0 = aut.init_state if x0 is None else x0
    names = aut.variable_names
    bounds = [(names.index(n), n, lo, hi) for n, lo, hi in envelope.bounds]
    for idx, n, lo, hi in bounds:
        if x0[idx] < lo or x0[idx] > hi:
            return HazardVerdict(True, 0.0, n, float(x0[idx]))
    if not bounds:
        return HazardVerdict(False)

    flow = system.flow(m)
    traj = integrate(flow, augment(flow, x0), horizon, dt, m.id)
    X = traj.states
    outside = np.zeros(len(X), dtype=bool)
    for idx, _, lo, hi in bounds:
        outside |= (X[:, idx] < lo) | (X[:, idx] > hi)
    hits = np.flatnonzero(outside)
    if hits.size == 0:
        return HazardVerdict(False)

    k = int(hits[0])
    t0, t1 = traj.times[k - 1], traj.times[k]
    z0, z1 = X[k - 1], X[k]
    f0 = np.asarray(flow(t0, z0))
    f1 = np.asarray(flow(t1, z1))
    h = t1 - t0
    best = None
    for idx, n, lo, hi in bounds:
        y1 = z1[idx]
        if lo <= y1 <= hi:
            continue
        bound = hi if y1 > hi else lo
        above = y1 > hi

        def out(s, idx=idx, bound=bound, above=above):
            y = _hermite(z0[idx], z1[idx], f0[idx], f1[idx], h, s)
            return y > bound if above else y < bound

        a, b = 0.0, h
        while b - a > dt / 100.0:
            mid = 0.5 * (a + b)
            if out(mid):
                b = mid
            else:
                a = mid
        tau = t0 + 0.5 * (a + b)
        value = _hermite(z0[idx], z1[idx], f0[idx], f1[idx], h, tau - t0)
        if best is None or tau < best[0]:
            best = (tau, n, value)
    tau, n, value = best
    return HazardVerdict(True, float(tau), n, float(value))


def classify_modes(
    system: HybridSystem, envelope: Envelope, horizon: float, dt: float = DEFAULT_DT
) -> dict[str, HazardVerdict]:
    """Hazard verdict for every mode, each simulated from the initial state."""
    aut = system.automaton
    x0 = aut.init_state
    values = dict(zip(aut.variable_names, x0))
    if envelope.violated(values):
        raise ValueError("automaton init_state lies outside the envelope")
    return {m.id: hazard_time(system, m, x0, envelope, horizon, dt) for m in aut.modes}


def hazardous_modes(verdicts: Mapping[str, HazardVerdict]) -> list[str]:
    return [m for m, v in verdicts.items() if v.hazardous]


def equilibrium(trajectory: Trajectory, tol: float) -> tuple[float, np.ndarray] | None:
    """First time after which every finite-difference rate stays below ``tol``.

    Returns ``(time, terminal_state)``, or ``None`` when the trajectory is
    still moving on its last step.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    X = trajectory.states
    if len(X) < 2:
        return (float(trajectory.times[0]), X[-1].copy())
    rates = np.abs(np.diff(X, axis=0)) / np.diff(trajectory.times)[:, None]
    moving = np.flatnonzero((rates >= tol).any(axis=1))
    if moving.size == 0:
        return (float(trajectory.times[0]), X[-1].copy())
    last = int(moving[-1])
    if last == len(rates) - 1:
        return None
    return (float(trajectory.times[last + 1]), X[-1].copy())
