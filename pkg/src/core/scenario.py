"""
Correlation scenarios, behaviors, Bell functionals and deterministic strategies

Internally every index is 0-based; the JSON file formats use 1-based indices.
A behavior table and a functional's dense coefficients share one array layout:
shape (S_1, ..., S_N, L_1, ..., L_N), settings first, outcomes second.
"""

import math
import itertools

import numpy as np

import bellbound_conf
from src.core.errors import ValidationError, CapExceededError


def _frozen(array):
    """Return a read-only copy of an array"""
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


def _interleaved_to_table(t, n_parties):
    """Reorder axes (S_1, L_1, S_2, L_2, ...) into (S_1..S_N, L_1..L_N)"""
    order = [2 * n for n in range(n_parties)] + [2 * n + 1 for n in range(n_parties)]
    return np.transpose(t, order)


class ScenarioSpec:
    """N parties, S_n settings each, numeric outcome set Lambda_n per party"""

    def __init__(self, n_parties, settings, outcomes, strategy_cap=None):
        """Validate and store the scenario"""
        if strategy_cap is None:
            strategy_cap = bellbound_conf.STRATEGY_CAP

        if int(n_parties) < 1:
            raise ValidationError(f"n_parties must be >= 1, got {n_parties}")
        n_parties = int(n_parties)
        settings = list(settings)
        outcomes = [list(o) for o in outcomes]
        if len(settings) != n_parties:
            raise ValidationError(f"Expected {n_parties} setting counts, got {len(settings)}")
        if len(outcomes) != n_parties:
            raise ValidationError(f"Expected {n_parties} outcome lists, got {len(outcomes)}")

        for n, s in enumerate(settings):
            if int(s) != s or s < 1:
                raise ValidationError(f"Party {n + 1}: setting count must be a positive integer, got {s}")
        for n, values in enumerate(outcomes):
            if not values:
                raise ValidationError(f"Party {n + 1}: empty outcome set")
            values = [float(v) for v in values]
            if not all(math.isfinite(v) for v in values):
                raise ValidationError(f"Party {n + 1}: outcome values must be finite")
            if len(set(values)) != len(values):
                raise ValidationError(f"Party {n + 1}: outcome values must be distinct, got {values}")

        self.n_parties = n_parties
        self.settings = tuple(int(s) for s in settings)
        self.outcomes = tuple(tuple(float(v) for v in values) for values in outcomes)
        self.outcome_counts = tuple(len(values) for values in self.outcomes)

        # Exact integer arithmetic, never overflows
        self.strategy_count = 1
        for s, l in zip(self.settings, self.outcome_counts):
            self.strategy_count *= l ** s
        self.strategy_cap = int(strategy_cap)
        if self.strategy_count > self.strategy_cap:
            raise CapExceededError(
                f"Scenario has {self.strategy_count} deterministic strategies, cap is {self.strategy_cap}")

    @property
    def table_shape(self):
        """Shape of a behavior table array"""
        return self.settings + self.outcome_counts

    @property
    def setting_tuples(self):
        """All setting tuples in lexicographic order"""
        return list(itertools.product(*[range(s) for s in self.settings]))

    def same_as(self, other):
        """Check that two scenarios describe the same settings and outcomes"""
        return (isinstance(other, ScenarioSpec)
                and self.settings == other.settings
                and self.outcomes == other.outcomes)

    def require_same(self, other):
        """Raise unless `other` is the same scenario"""
        if not self.same_as(other):
            raise ValidationError(f"Scenario mismatch: {self} vs {other}")

    def __eq__(self, other):
        return self.same_as(other)

    def __hash__(self):
        return hash((self.settings, self.outcomes))

    def __str__(self):
        """String representation"""
        return f"ScenarioSpec(N={self.n_parties}, settings={list(self.settings)}, outcomes={list(self.outcome_counts)})"


def new_scenario(n_parties, settings, outcomes, strategy_cap=None):
    """Build a validated scenario"""
    return ScenarioSpec(n_parties, settings, outcomes, strategy_cap=strategy_cap)


def dichotomic_scenario(n_parties, n_settings):
    """Scenario with +1/-1 outcomes and the same setting count at every site"""
    return ScenarioSpec(n_parties, [n_settings] * n_parties, [[1.0, -1.0]] * n_parties)


class BellFunctional:
    """Sparse coefficient family psi_(s_1..s_N)(l_1..l_N) over a scenario"""

    def __init__(self, scenario, terms):
        """Store terms as {(setting tuple, outcome-index tuple): coefficient}, 0-based"""
        self.scenario = scenario
        dense = np.zeros(scenario.table_shape)
        clean = {}
        for key, coefficient in dict(terms).items():
            settings, indices = key
            settings = tuple(int(s) for s in settings)
            indices = tuple(int(l) for l in indices)
            if len(settings) != scenario.n_parties or len(indices) != scenario.n_parties:
                raise ValidationError(f"Term {key} does not have {scenario.n_parties} components")
            for n in range(scenario.n_parties):
                if not 0 <= settings[n] < scenario.settings[n]:
                    raise ValidationError(f"Term {key}: setting index out of range at party {n + 1}")
                if not 0 <= indices[n] < scenario.outcome_counts[n]:
                    raise ValidationError(f"Term {key}: outcome index out of range at party {n + 1}")
            coefficient = float(coefficient)
            if not math.isfinite(coefficient):
                raise ValidationError(f"Term {key}: coefficient must be finite")
            dense[settings + indices] += coefficient
            clean[(settings, indices)] = clean.get((settings, indices), 0.0) + coefficient
        self.terms = clean
        self.coefficients = _frozen(dense)

    @classmethod
    def from_array(cls, scenario, array):
        """Build a functional from a dense coefficient array"""
        array = np.asarray(array, dtype=float)
        if array.shape != scenario.table_shape:
            raise ValidationError(f"Coefficient array shape {array.shape} != {scenario.table_shape}")
        n = scenario.n_parties
        terms = {}
        for index in zip(*np.nonzero(array)):
            index = tuple(int(i) for i in index)
            terms[(index[:n], index[n:])] = float(array[index])
        return cls(scenario, terms)

    @property
    def is_degenerate(self):
        """True when the functional is identically zero"""
        return not np.any(self.coefficients)

    def strategy_value(self, strategy):
        """Sum of psi over setting tuples at the strategy's assigned outcomes"""
        return float(np.sum(self.coefficients * deterministic_behavior(strategy).tables))

    def __str__(self):
        """String representation"""
        return f"BellFunctional({self.scenario}, terms={len(self.terms)})"


class Behavior:
    """Joint outcome distributions, one table per setting tuple"""

    def __init__(self, scenario, tables, signed=False, tol=None):
        """Validate normalization (and nonnegativity unless signed)"""
        if tol is None:
            tol = bellbound_conf.FEASIBILITY_TOL
        tables = np.asarray(tables, dtype=float)
        if tables.shape != scenario.table_shape:
            raise ValidationError(f"Behavior tables shape {tables.shape} != {scenario.table_shape}")
        if not np.all(np.isfinite(tables)):
            raise ValidationError("Behavior entries must be finite")

        n = scenario.n_parties
        sums = tables.sum(axis=tuple(range(n, 2 * n)))
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > tol:
            raise ValidationError(f"Behavior tables must sum to 1, worst deviation {worst:.3e}")
        if not signed and float(tables.min()) < -bellbound_conf.NONNEGATIVE_TOL:
            raise ValidationError(f"Behavior has a negative entry {float(tables.min()):.3e}; mark it signed")

        self.scenario = scenario
        self.tables = _frozen(tables)
        self.signed = bool(signed)

    def table(self, settings):
        """Distribution for one setting tuple (0-based)"""
        return self.tables[tuple(settings)]

    def marginal(self, parties):
        """Marginal over `parties`, for every full setting tuple

        Result shape is (S_1..S_N, L_p for p in parties).
        """
        n = self.scenario.n_parties
        drop = tuple(n + m for m in range(n) if m not in parties)
        return self.tables.sum(axis=drop)

    def is_no_signaling(self, tol=1e-10):
        """Check that every party subset's marginal ignores the other parties' settings"""
        n = self.scenario.n_parties
        for size in range(1, n):
            for parties in itertools.combinations(range(n), size):
                marg = self.marginal(parties)
                for m in range(n):
                    if m in parties:
                        continue
                    spread = marg.max(axis=m) - marg.min(axis=m)
                    if float(np.max(spread)) > tol:
                        return False
        return True

    def __str__(self):
        """String representation"""
        kind = "signed" if self.signed else "proper"
        return f"Behavior({self.scenario}, {kind})"


class DeterministicStrategy:
    """One outcome index per (party, setting) pair"""

    def __init__(self, scenario, assignment):
        """Store assignment[n][s] = outcome index of party n under setting s"""
        assignment = tuple(tuple(int(l) for l in local) for local in assignment)
        if len(assignment) != scenario.n_parties:
            raise ValidationError(f"Strategy needs {scenario.n_parties} local assignments")
        for n, local in enumerate(assignment):
            if len(local) != scenario.settings[n]:
                raise ValidationError(f"Party {n + 1}: expected {scenario.settings[n]} outputs, got {len(local)}")
            if any(not 0 <= l < scenario.outcome_counts[n] for l in local):
                raise ValidationError(f"Party {n + 1}: outcome index out of range in {local}")
        self.scenario = scenario
        self.assignment = assignment

    def outcome_values(self):
        """Assigned numeric outcomes lambda_n^(s_n)"""
        return [[self.scenario.outcomes[n][l] for l in local] for n, local in enumerate(self.assignment)]

    def to_list(self):
        """1-based nested list used by the JSON reports"""
        return [[l + 1 for l in local] for local in self.assignment]

    def __eq__(self, other):
        return isinstance(other, DeterministicStrategy) and self.assignment == other.assignment

    def __hash__(self):
        return hash(self.assignment)

    def __str__(self):
        """String representation"""
        return f"DeterministicStrategy({self.to_list()})"


def _local_assignments(scenario, n):
    """All outcome assignments of party n in lexicographic order"""
    return list(itertools.product(range(scenario.outcome_counts[n]), repeat=scenario.settings[n]))


def enumerate_strategies(scenario):
    """Yield every deterministic strategy exactly once

    Order is lexicographic in (party 1 setting 1, ..., party 1 setting S_1,
    party 2 setting 1, ..., party N setting S_N), the last position varying
    fastest.
    """
    if scenario.strategy_count > scenario.strategy_cap:
        raise CapExceededError(
            f"Scenario has {scenario.strategy_count} strategies, cap is {scenario.strategy_cap}")
    locals_per_party = [_local_assignments(scenario, n) for n in range(scenario.n_parties)]
    for assignment in itertools.product(*locals_per_party):
        yield DeterministicStrategy(scenario, assignment)


def local_strategy_counts(scenario):
    """Number of local assignments L_n^S_n per party"""
    return tuple(l ** s for s, l in zip(scenario.settings, scenario.outcome_counts))


def local_assignment_table(scenario, n):
    """(L_n^S_n, S_n) integer array of party n's assignments in enumeration order"""
    return np.array(_local_assignments(scenario, n), dtype=int).reshape(-1, scenario.settings[n])


def strategy_at(scenario, index):
    """The strategy at position `index` of enumerate_strategies"""
    if not 0 <= index < scenario.strategy_count:
        raise ValidationError(f"Strategy index {index} out of range")
    local_indices = np.unravel_index(int(index), local_strategy_counts(scenario))
    assignment = [local_assignment_table(scenario, n)[i] for n, i in enumerate(local_indices)]
    return DeterministicStrategy(scenario, assignment)


def local_one_hot(scenario, n, local):
    """(S_n, L_n) indicator array of one party's assignment"""
    one_hot = np.zeros((scenario.settings[n], scenario.outcome_counts[n]))
    one_hot[np.arange(scenario.settings[n]), list(local)] = 1.0
    return one_hot


def deterministic_behavior(strategy):
    """Point-mass behavior of a deterministic strategy"""
    scenario = strategy.scenario
    t = np.ones(())
    for n, local in enumerate(strategy.assignment):
        t = np.multiply.outer(t, local_one_hot(scenario, n, local))
    return Behavior(scenario, _interleaved_to_table(t, scenario.n_parties))


def strategy_matrix(scenario):
    """Matrix whose columns are the flattened deterministic behaviors, in enumeration order"""
    # Built party by party: column index ordering matches enumerate_strategies
    n = scenario.n_parties
    t = np.ones((1,))
    for m in range(n):
        locals_m = _local_assignments(scenario, m)
        stack = np.stack([local_one_hot(scenario, m, local) for local in locals_m])
        # t axes: (strategies so far, S_1, L_1, ..., S_{m}, L_{m})
        t = np.multiply.outer(t, stack)
        # move the new strategy axis next to the first one and merge
        t = np.moveaxis(t, 2 * m + 1, 1)
        t = t.reshape((t.shape[0] * t.shape[1],) + t.shape[2:])
    order = [0] + [1 + 2 * k for k in range(n)] + [2 + 2 * k for k in range(n)]
    t = np.transpose(t, order)
    return t.reshape(t.shape[0], -1).T


def behavior_average(behavior, functional):
    """Average of the functional: sum over setting tuples of the psi-averages"""
    behavior.scenario.require_same(functional.scenario)
    return float(np.sum(functional.coefficients * behavior.tables))


def white_noise(scenario):
    """Behavior with every table uniform"""
    size = float(np.prod(scenario.outcome_counts))
    return Behavior(scenario, np.full(scenario.table_shape, 1.0 / size))


def mix(first, second, weight):
    """(1 - weight) * first + weight * second"""
    first.scenario.require_same(second.scenario)
    signed = first.signed or second.signed or not 0.0 <= weight <= 1.0
    tables = (1.0 - weight) * first.tables + weight * second.tables
    return Behavior(first.scenario, tables, signed=signed)


def correlation_functional(scenario, signs):
    """psi_s(l) = signs[s] * product of the outcome values lambda_n^(l_n)"""
    n = scenario.n_parties
    products = np.ones(())
    for values in scenario.outcomes:
        products = np.multiply.outer(products, np.array(values))
    dense = np.zeros(scenario.table_shape)
    for settings, sign in signs.items():
        settings = tuple(settings)
        if len(settings) != n:
            raise ValidationError(f"Setting tuple {settings} does not have {n} components")
        dense[settings] = float(sign) * products
    return BellFunctional.from_array(scenario, dense)


def chsh():
    """E11 + E12 + E21 - E22 on the dichotomic 2x2 scenario"""
    scenario = dichotomic_scenario(2, 2)
    return correlation_functional(scenario, {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1})


def mermin(n_parties):
    """Mermin functional: imaginary part of prod_n (a_n^(1) + i a_n^(2))"""
    if n_parties < 2:
        raise ValidationError(f"Mermin functional needs N >= 2, got {n_parties}")
    scenario = dichotomic_scenario(n_parties, 2)
    signs = {}
    for settings in itertools.product(range(2), repeat=n_parties):
        k = sum(settings)
        coefficient = [0, 1, 0, -1][k % 4]
        if coefficient:
            signs[settings] = coefficient
    return correlation_functional(scenario, signs)


def cglmp(d):
    """Collins-Gisin-Linden-Massar-Popescu functional I_d on the 2x2 scenario with d outcomes"""
    if d < 2:
        raise ValidationError(f"CGLMP functional needs d >= 2, got {d}")
    scenario = ScenarioSpec(2, [2, 2], [list(range(d))] * 2)
    dense = np.zeros(scenario.table_shape)

    def add(x, y, shift, weight, a_from_b):
        # a_from_b: P(A_x = B_y + shift) else P(B_y = A_x + shift)
        for j in range(d):
            if a_from_b:
                dense[x, y, (j + shift) % d, j] += weight
            else:
                dense[x, y, j, (j + shift) % d] += weight

    for k in range(d // 2):
        w = 1.0 - 2.0 * k / (d - 1)
        add(0, 0, k, w, True)
        add(1, 0, k + 1, w, False)
        add(1, 1, k, w, True)
        add(0, 1, k, w, False)
        add(0, 0, -k - 1, -w, True)
        add(1, 0, -k, -w, False)
        add(1, 1, -k - 1, -w, True)
        add(0, 1, -k - 1, -w, False)
    return BellFunctional.from_array(scenario, dense)


def named_functional(name):
    """Resolve 'chsh', 'mermin:N' or 'cglmp:d'"""
    key, _, arg = name.strip().lower().partition(":")
    arg = arg.split("=")[-1] if arg else ""
    if key == "chsh":
        return chsh()
    if key == "mermin":
        return mermin(int(arg) if arg else 3)
    if key == "cglmp":
        return cglmp(int(arg) if arg else 3)
    raise ValidationError(f"Unknown functional shorthand '{name}'")
