"""
LHV constants, Bell-type inequality checks, the maximal Bell violation by
linear programming, and LqHV models built from source operators
"""

import itertools

import numpy as np

import bellbound_conf
from src.core.errors import (
    ValidationError, DegenerateFunctionalError, DilationError, NonConvergenceError
)
from src.core.scenario import (
    Behavior, BellFunctional, DeterministicStrategy, behavior_average,
    local_assignment_table, local_strategy_counts, strategy_at, strategy_matrix
)
from src.core.simplex import solve_lp
from src.utils.helpers import get_logger
from src.utils.linalg import contract_factors

logger = get_logger(__name__)


class LhvConstants:
    """B^sup, B^inf and B = max(|B^sup|, |B^inf|) with extremal strategies"""

    def __init__(self, b_sup, b_inf, witness_sup, witness_inf):
        """Store the constants"""
        self.b_sup = float(b_sup)
        self.b_inf = float(b_inf)
        self.b_max = max(abs(self.b_sup), abs(self.b_inf))
        self.witness_sup = witness_sup
        self.witness_inf = witness_inf

    @property
    def degenerate(self):
        """True when b_max vanishes and normalized ratios are undefined"""
        return self.b_max <= bellbound_conf.FEASIBILITY_TOL

    def __str__(self):
        """String representation"""
        return f"LhvConstants(b_inf={self.b_inf:.6f}, b_sup={self.b_sup:.6f})"


def lhv_constants(functional, allow_degenerate=False, batch_size=1 << 18):
    """Extremes of the functional over deterministic strategies

    All parties but the last are enumerated; for each of their assignments
    the last party picks its best outcome independently per setting.
    """
    scenario = functional.scenario
    if functional.is_degenerate:
        if not allow_degenerate:
            raise DegenerateFunctionalError("Functional is identically zero")
        first = strategy_at(scenario, 0)
        return LhvConstants(0.0, 0.0, first, first)

    n = scenario.n_parties
    coefficients = functional.coefficients
    last = n - 1
    prefix_counts = local_strategy_counts(scenario)[:last]
    prefix_total = int(np.prod(prefix_counts)) if prefix_counts else 1
    tables = [local_assignment_table(scenario, m) for m in range(last)]

    s_last = scenario.settings[last]
    l_last = scenario.outcome_counts[last]
    per_prefix = int(np.prod(scenario.settings)) * l_last
    batch_size = max(1, batch_size // per_prefix)

    best_sup, best_inf = None, None
    arg_sup, arg_inf = None, None

    for start in range(0, prefix_total, batch_size):
        batch = np.arange(start, min(start + batch_size, prefix_total))
        reduced = _reduce_to_last_party(coefficients, scenario, tables, prefix_counts, batch)
        sup_values = reduced.max(axis=2).sum(axis=1)
        inf_values = reduced.min(axis=2).sum(axis=1)

        i = int(np.argmax(sup_values))
        if best_sup is None or sup_values[i] > best_sup:
            best_sup = sup_values[i]
            arg_sup = (int(batch[i]), np.argmax(reduced[i], axis=1))
        i = int(np.argmin(inf_values))
        if best_inf is None or inf_values[i] < best_inf:
            best_inf = inf_values[i]
            arg_inf = (int(batch[i]), np.argmin(reduced[i], axis=1))

    witness_sup = _assemble_strategy(scenario, tables, prefix_counts, *arg_sup)
    witness_inf = _assemble_strategy(scenario, tables, prefix_counts, *arg_inf)
    # Re-evaluate so the witnesses attain the constants exactly
    constants = LhvConstants(functional.strategy_value(witness_sup),
                             functional.strategy_value(witness_inf),
                             witness_sup, witness_inf)
    if constants.degenerate and not allow_degenerate:
        raise DegenerateFunctionalError("Functional has b_max = 0")
    logger.debug(f"LHV constants over {scenario.strategy_count} strategies: {constants}")
    return constants


def _reduce_to_last_party(coefficients, scenario, tables, prefix_counts, batch):
    """Array (batch, S_N, L_N) of psi summed over the prefix parties' settings"""
    n = scenario.n_parties
    last = n - 1
    if last == 0:
        return coefficients[np.newaxis, :, :]

    local_indices = np.unravel_index(batch, prefix_counts)
    ndim = 1 + n + 1  # batch, S_1..S_N, L_N
    index = []
    for m in range(last):
        shape = [1] * ndim
        shape[1 + m] = scenario.settings[m]
        index.append(np.arange(scenario.settings[m]).reshape(shape))
    shape = [1] * ndim
    shape[n] = scenario.settings[last]
    index.append(np.arange(scenario.settings[last]).reshape(shape))
    for m in range(last):
        assigned = tables[m][local_indices[m]]  # (batch, S_m)
        shape = [1] * ndim
        shape[0] = len(batch)
        shape[1 + m] = scenario.settings[m]
        index.append(assigned.reshape(shape))
    shape = [1] * ndim
    shape[n + 1] = scenario.outcome_counts[last]
    index.append(np.arange(scenario.outcome_counts[last]).reshape(shape))

    values = coefficients[tuple(index)]
    values = np.broadcast_to(values, (len(batch),) + scenario.settings + (scenario.outcome_counts[last],))
    return values.sum(axis=tuple(range(1, n)))


def _assemble_strategy(scenario, tables, prefix_counts, prefix_index, last_choice):
    """Strategy from a prefix enumeration index and the last party's choices"""
    assignment = []
    if prefix_counts:
        local_indices = np.unravel_index(prefix_index, prefix_counts)
        assignment = [tables[m][i] for m, i in enumerate(local_indices)]
    assignment.append(list(last_choice))
    return DeterministicStrategy(scenario, assignment)


class LhvCheckReport:
    """Outcome of testing the LHV constraint on one behavior"""

    def __init__(self, average, constants, tol):
        """Evaluate the violation flags"""
        self.average = float(average)
        self.b_inf = constants.b_inf
        self.b_sup = constants.b_sup
        self.b_max = constants.b_max
        self.violated = self.average > self.b_sup + tol or self.average < self.b_inf - tol
        self.normalized_violation = abs(self.average) / self.b_max

    def to_dict(self):
        """Report fields as a dict"""
        return {
            "average": self.average,
            "b_inf": self.b_inf,
            "b_sup": self.b_sup,
            "violated": self.violated,
            "normalized_violation": self.normalized_violation,
        }


def check_lhv_constraint(functional, behavior, constants=None, tol=None):
    """Compare the functional average with the LHV constants"""
    if tol is None:
        tol = bellbound_conf.FEASIBILITY_TOL
    behavior.scenario.require_same(functional.scenario)
    if constants is None:
        constants = lhv_constants(functional)
    if constants.degenerate:
        raise DegenerateFunctionalError("Cannot normalize by a degenerate functional")
    return LhvCheckReport(behavior_average(behavior, functional), constants, tol)


def quantum_range(constants, upsilon):
    """Interval every quantum average must lie in, given the maximal violation"""
    widening = 0.5 * (upsilon - 1.0) * (constants.b_sup - constants.b_inf)
    return constants.b_inf - widening, constants.b_sup + widening


class ViolationCertificate:
    """Minimal-l1 signed decomposition of a behavior into deterministic behaviors"""

    def __init__(self, upsilon, terms, residual, backend):
        """Store Upsilon, the (strategy, coefficient) terms and the reproduction residual"""
        self.upsilon = float(upsilon)
        self.terms = terms
        self.residual = float(residual)
        self.backend = backend

    @property
    def negative_mass(self):
        """Total weight carried by negative coefficients"""
        return float(sum(-c for _, c in self.terms if c < 0))

    def to_dict(self):
        """JSON form {upsilon, terms: [{strategy, c}], residual}"""
        return {
            "upsilon": self.upsilon,
            "terms": [{"strategy": s.to_list(), "c": c} for s, c in self.terms],
            "residual": self.residual,
        }

    def __str__(self):
        """String representation"""
        return f"ViolationCertificate(upsilon={self.upsilon:.6f}, terms={len(self.terms)})"


def maximal_violation(behavior, backend=None):
    """Upsilon as the minimal l1 mass of sum_i c_i D_i = behavior

    Variables split c = u - v with u, v >= 0; sum_i c_i = 1 follows from the
    table normalizations and is asserted, not imposed.
    """
    if behavior.signed:
        raise ValidationError("Maximal violation needs a proper (nonnegative) behavior")
    if not behavior.is_no_signaling(tol=bellbound_conf.FEASIBILITY_TOL):
        raise ValidationError("Maximal violation needs a no-signaling behavior")
    scenario = behavior.scenario
    strategies = strategy_matrix(scenario)
    target = behavior.tables.ravel()
    k = strategies.shape[1]

    A = np.hstack([strategies, -strategies])
    cost = np.ones(2 * k)
    result = solve_lp(cost, A, target, backend=backend)
    c = result.x[:k] - result.x[k:]

    residual = float(np.max(np.abs(strategies @ c - target)))
    if residual > bellbound_conf.REPORTING_TOL:
        raise NonConvergenceError(f"LP decomposition residual {residual:.3e} too large")
    total = float(c.sum())
    if abs(total - 1.0) > bellbound_conf.REPORTING_TOL:
        raise ValidationError(f"Decomposition weights sum to {total:.9f}, not 1; behavior not normalized")

    mass = float(np.abs(c).sum())
    terms = [(strategy_at(scenario, i), float(c[i])) for i in np.flatnonzero(np.abs(c) > 1e-12)]
    logger.debug(f"LP ({result.backend}) solved in {result.iterations} pivots, mass {mass:.12f}")
    return ViolationCertificate(max(1.0, mass), terms, residual, result.backend)


def _sign_patterns(n_entries, start, stop):
    """Rows of +-1 patterns numbered start..stop-1 (bit b of the index -> entry b)"""
    numbers = np.arange(start, stop, dtype=np.int64)[:, np.newaxis]
    bits = (numbers >> np.arange(n_entries, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


class SampledViolation:
    """Best normalized violation found over sampled functionals"""

    def __init__(self, value, functional, samples):
        """Store the best ratio and its functional"""
        self.value = float(value)
        self.functional = functional
        self.samples = samples


def sampled_violation(behavior, n_samples=100000, seed=0, sign_patterns=True,
                      max_pattern_entries=16, batch=4096):
    """Primal oracle: max |<psi, P>| / b_max over random functionals

    Gaussian random coefficient arrays are drawn from the seeded generator;
    when the table has at most `max_pattern_entries` entries every +-1 sign
    pattern is tried as well.
    """
    scenario = behavior.scenario
    strategies = strategy_matrix(scenario)
    target = behavior.tables.ravel()
    n_entries = target.size
    rng = np.random.default_rng(seed)

    best_value = 0.0
    best_row = None

    def consider(rows):
        nonlocal best_value, best_row
        classical = np.abs(rows @ strategies).max(axis=1)
        quantum = np.abs(rows @ target)
        valid = classical > 1e-12
        if not np.any(valid):
            return
        ratios = np.where(valid, quantum / np.where(valid, classical, 1.0), 0.0)
        i = int(np.argmax(ratios))
        if ratios[i] > best_value:
            best_value = float(ratios[i])
            best_row = rows[i].copy()

    for start in range(0, n_samples, batch):
        size = min(batch, n_samples - start)
        consider(rng.standard_normal((size, n_entries)))

    total = n_samples
    if sign_patterns and n_entries <= max_pattern_entries:
        count = 1 << n_entries
        for start in range(0, count, batch):
            consider(_sign_patterns(n_entries, start, min(start + batch, count)))
        total += count

    functional = None
    if best_row is not None:
        functional = BellFunctional.from_array(scenario, best_row.reshape(scenario.table_shape))
    return SampledViolation(best_value, functional, total)


class LqhvModel:
    """Signed weights nu over omega in prod_n Lambda_n^S_n with deterministic responses

    nu has one axis per (party n, setting s_n) in party-major order; party n
    under setting s_n outputs the component omega_n^(s_n).
    """

    def __init__(self, scenario, nu, tol=None):
        """Validate normalization"""
        if tol is None:
            tol = bellbound_conf.FEASIBILITY_TOL
        nu = np.array(nu, dtype=float)
        expected = tuple(itertools.chain.from_iterable(
            [l] * s for s, l in zip(scenario.settings, scenario.outcome_counts)))
        if nu.shape != expected:
            raise ValidationError(f"nu shape {nu.shape} != {expected}")
        total = float(nu.sum())
        if abs(total - 1.0) > tol:
            raise ValidationError(f"nu must be normalized, sums to {total:.12f}")
        nu.flags.writeable = False
        self.scenario = scenario
        self.nu = nu

    def _axis(self, n, s):
        """Axis of nu holding omega_n^(s)"""
        return sum(self.scenario.settings[:n]) + s

    def reconstruct(self):
        """The behavior generated by the model"""
        scenario = self.scenario
        tables = np.zeros(scenario.table_shape)
        all_axes = set(range(self.nu.ndim))
        for settings in scenario.setting_tuples:
            keep = [self._axis(n, s) for n, s in enumerate(settings)]
            tables[settings] = self.nu.sum(axis=tuple(sorted(all_axes - set(keep))))
        signed = bool(tables.min() < -bellbound_conf.NONNEGATIVE_TOL)
        return Behavior(scenario, tables, signed=signed)

    @property
    def is_proper(self):
        """True when nu is a probability measure"""
        return bool(self.nu.min() >= -bellbound_conf.NONNEGATIVE_TOL)

    def summary(self):
        """Sign pattern summary used by reports"""
        return {
            "omega_count": int(self.nu.size),
            "nu_min": float(self.nu.min()),
            "nu_max": float(self.nu.max()),
            "negative_count": int(np.sum(self.nu < -bellbound_conf.NONNEGATIVE_TOL)),
            "total_variation": total_variation(self),
        }

    def __str__(self):
        """String representation"""
        return f"LqhvModel({self.scenario}, total_variation={total_variation(self):.6f})"


def lqhv_from_source(source, povms):
    """nu(omega) = tr[T (M_1^(1)(omega_1^(1)) x ... x M_N^(S_N)(omega_N^(S_N)))]"""
    if list(source.copies) != list(povms.scenario.settings):
        raise ValidationError(
            f"Source operator copies {list(source.copies)} != POVM settings {list(povms.scenario.settings)}")
    if list(source.site_dims) != list(povms.dims):
        raise ValidationError(f"Source operator dims {list(source.site_dims)} != POVM dims {list(povms.dims)}")
    passed, residual = source.dilation_check()
    if not passed:
        raise DilationError(f"Source operator fails the dilation check (residual {residual:.3e})")

    effects = []
    for n, stack in enumerate(povms.elements):
        for s in range(povms.scenario.settings[n]):
            effects.append(stack[s])
    nu = contract_factors(source.matrix, source.factor_dims, effects)
    imaginary = float(np.max(np.abs(nu.imag), initial=0.0))
    if imaginary > 1e-9:
        raise ValidationError(f"nu has an imaginary part {imaginary:.3e}; source operator not self-adjoint")
    return LqhvModel(povms.scenario, nu.real)


def total_variation(model):
    """Sum of |nu(omega)|; 1 exactly for LHV models"""
    return float(np.abs(model.nu).sum())
