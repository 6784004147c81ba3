"""
Closed-form upper bounds on the maximal Bell violation and the comparison
ledger checking a computed violation against every bound that applies
"""

import math

import bellbound_conf
from src.core.errors import ValidationError
from src.utils.helpers import get_logger, format_value

logger = get_logger(__name__)

# Grothendieck constant K_G = lim K_G(n) lies in this interval
KG_LOWER = 1.676
KG_UPPER = 1.782
# sqrt(2) <= K_G(3) <= 1.5163
KG3_UPPER = 1.5163


def _require_int(name, value, minimum):
    """Validate an integer parameter"""
    if int(value) != value or value < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def _product(values):
    result = 1
    for v in values:
        result *= v
    return result


def _reduced_product(values):
    """prod(values) / max(values), exact"""
    return _product(values) // max(values)


def bound_singlet(n_settings):
    """Two-qubit singlet with S x 2 settings and any outcomes: sqrt(3)"""
    _require_int("S", n_settings, 2)
    return math.sqrt(3.0)


def bound_ghz_qudit(n_parties, d, n_settings):
    """N-qudit GHZ state: min{(2S-1)^(N-1), 1 + 2^(N-1)(d-1)}"""
    n = _require_int("N", n_parties, 2)
    d = _require_int("d", d, 2)
    s = _require_int("S", n_settings, 1)
    return min((2 * s - 1) ** (n - 1), 1 + 2 ** (n - 1) * (d - 1))


def bound_ghz_qudit_relaxed(n_parties, d, n_settings):
    """Weaker GHZ form 1 + 2^(N-1)[min{S^(N-1), d} - 1]"""
    n = _require_int("N", n_parties, 2)
    d = _require_int("d", d, 2)
    s = _require_int("S", n_settings, 1)
    return 1 + 2 ** (n - 1) * (min(s ** (n - 1), d) - 1)


def bound_generalized_ghz(n_parties, phi):
    """Generalized N-qubit GHZ state: 1 + 2^(N-1)|sin 2 phi|"""
    n = _require_int("N", n_parties, 2)
    return 1.0 + 2 ** (n - 1) * abs(math.sin(2.0 * phi))


def bound_general(dims, settings):
    """Any state on C^d_1 x ... x C^d_N with S_n settings:
    1 + 2^(N-1)[min{prod S / max S, prod d / max d} - 1]
    """
    dims = [_require_int("d_n", d, 1) for d in dims]
    settings = [_require_int("S_n", s, 1) for s in settings]
    if len(dims) != len(settings) or not dims:
        raise ValidationError(f"dims {dims} and settings {settings} must have one entry per party")
    n = len(dims)
    return 1 + 2 ** (n - 1) * (min(_reduced_product(settings), _reduced_product(dims)) - 1)


def universal_envelope(n_parties, n_settings):
    """(2S - 1)^(N-1), valid for any state of any dimension"""
    n = _require_int("N", n_parties, 1)
    s = _require_int("S", n_settings, 1)
    return (2 * s - 1) ** (n - 1)


def bound_equal_settings(dims, n_parties, n_settings):
    """S settings at every site: min{(2S-1)^(N-1), 1 + 2^(N-1)(prod d / max d - 1)}"""
    n = _require_int("N", n_parties, 1)
    dims = [_require_int("d_n", d, 1) for d in dims]
    if len(dims) != n:
        raise ValidationError(f"Expected {n} site dimensions, got {len(dims)}")
    return min(universal_envelope(n, n_settings), 1 + 2 ** (n - 1) * (_reduced_product(dims) - 1))


def bound_equal_settings_relaxed(dims, n_parties, n_settings):
    """Weaker form 1 + 2^(N-1)[min{S^(N-1), prod d / max d} - 1]"""
    n = _require_int("N", n_parties, 1)
    s = _require_int("S", n_settings, 1)
    dims = [_require_int("d_n", d, 1) for d in dims]
    if len(dims) != n:
        raise ValidationError(f"Expected {n} site dimensions, got {len(dims)}")
    return 1 + 2 ** (n - 1) * (min(s ** (n - 1), _reduced_product(dims)) - 1)


def bound_bipartite(s1, s2, d1, d2):
    """2 min{S_1, S_2, d_1, d_2} - 1"""
    values = [_require_int(name, v, 1) for name, v in (("S_1", s1), ("S_2", s2), ("d_1", d1), ("d_2", d2))]
    return 2 * min(values) - 1


def bound_tripartite(n_settings, d1, d2, d3):
    """min{(2S-1)^2, 4 d_1 d_2 d_3 / max d - 3}"""
    s = _require_int("S", n_settings, 1)
    dims = [_require_int("d_n", d, 1) for d in (d1, d2, d3)]
    return min((2 * s - 1) ** 2, 4 * _reduced_product(dims) - 3)


def bound_tripartite_equal_dims(n_settings, d):
    """Equal site dimensions: min{(2S-1)^2, 4d^2 - 3} and its relaxation 4 min{S, d}^2 - 3"""
    s = _require_int("S", n_settings, 1)
    d = _require_int("d", d, 1)
    return min((2 * s - 1) ** 2, 4 * d * d - 3), 4 * min(s, d) ** 2 - 3


def prior_bipartite_bounds(l1, l2, n_settings=None, d=None, kg=KG_UPPER):
    """Earlier bipartite bounds 2K_G + 1 (two outcomes each), 2 L_1 L_2 (K_G + 1) - 1,
    and the min{S, d} estimate that holds only up to an unknown constant
    """
    l1 = _require_int("L_1", l1, 1)
    l2 = _require_int("L_2", l2, 1)
    estimate = None
    if n_settings is not None and d is not None:
        estimate = min(int(n_settings), int(d))
    return {
        "bound_i": 2.0 * kg + 1.0 if (l1, l2) == (2, 2) else None,
        "bound_ii": 2.0 * l1 * l2 * (kg + 1.0) - 1.0,
        "estimate_jp": estimate,
    }


def settings_growth_threshold(d):
    """Smallest S with (2S - 1)^2 >= sqrt(d), in exact integer arithmetic"""
    d = _require_int("d", d, 1)
    root = math.isqrt(math.isqrt(d))
    while root ** 4 < d:
        root += 1
    # smallest odd 2S - 1 >= root
    return (root + 2) // 2


class BoundContext:
    """Scenario and state description deciding which bounds apply"""

    def __init__(self, n_parties, dims, settings, outcome_counts=None, family=None, params=None):
        """Validate and store the context"""
        self.n_parties = _require_int("N", n_parties, 1)
        self.dims = [_require_int("d_n", d, 1) for d in dims]
        self.settings = [_require_int("S_n", s, 1) for s in settings]
        if len(self.dims) != self.n_parties or len(self.settings) != self.n_parties:
            raise ValidationError(f"Context needs {self.n_parties} dims and settings")
        self.outcome_counts = [int(l) for l in outcome_counts] if outcome_counts else None
        if self.outcome_counts is not None and len(self.outcome_counts) != self.n_parties:
            raise ValidationError(f"Context needs {self.n_parties} outcome counts")
        self.family = family
        self.params = dict(params or {})

    @classmethod
    def from_state(cls, state, scenario):
        """Context of a state measured in a scenario"""
        return cls(state.n_parties, state.dims, scenario.settings, scenario.outcome_counts,
                   family=state.family, params=state.params)

    @property
    def equal_settings(self):
        return len(set(self.settings)) == 1

    def to_dict(self):
        """Report fields as a dict"""
        return {"N": self.n_parties, "dims": self.dims, "settings": self.settings,
                "outcomes": self.outcome_counts, "family": self.family}


class BoundEntry:
    """One row of the ledger"""

    def __init__(self, name, formula, value, applicable, note=""):
        """Store the row"""
        self.name = name
        self.formula = formula
        self.value = None if value is None else float(value)
        self.applicable = bool(applicable)
        self.note = note

    def to_dict(self):
        """Report fields as a dict"""
        return {"bound_name": self.name, "formula": self.formula, "value": self.value,
                "applicable": self.applicable, "note": self.note}


class BoundReport:
    """Ledger of catalog bounds with the pass flag for a computed violation"""

    def __init__(self, context, entries, violation_value=None):
        """Evaluate all_pass against every applicable entry"""
        self.context = context
        self.entries = entries
        self.violation_value = None if violation_value is None else float(violation_value)
        self.failures = []
        if self.violation_value is not None:
            self.failures = [e for e in entries
                             if e.applicable and self.violation_value > e.value + bellbound_conf.FEASIBILITY_TOL]
        self.all_pass = not self.failures

    def entry(self, name):
        """Look up an entry by bound name"""
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def applicable_minimum(self):
        """Tightest applicable bound"""
        values = [e.value for e in self.entries if e.applicable]
        return min(values) if values else None

    def to_dict(self):
        """Report fields as a dict"""
        return {
            "context": self.context.to_dict(),
            "entries": [e.to_dict() for e in self.entries],
            "violation_value": self.violation_value,
            "all_pass": self.all_pass,
        }

    def to_rows(self):
        """CSV rows: bound_name, formula, value, applicable"""
        return [[e.name, e.formula, format_value(e.value), str(e.applicable).lower()] for e in self.entries]


def _family_entries(context):
    """Bounds tied to the state family"""
    entries = []
    n = context.n_parties
    s_max = max(context.settings)
    family = context.family

    if family == "singlet" and n == 2:
        entries.append(BoundEntry("singlet", "sqrt(3)", bound_singlet(2), min(context.settings) <= 2,
                                  "S x 2 settings, any outcomes"))
        entries.append(BoundEntry("singlet-correlation", "K_G(3) <= 1.5163", KG3_UPPER, False,
                                  "correlation functionals only; reference"))
    if family == "ghz" and n >= 2:
        d = int(context.params.get("d", context.dims[0]))
        entries.append(BoundEntry("ghz-qudit", "min{(2S-1)^(N-1), 1+2^(N-1)(d-1)}",
                                  bound_ghz_qudit(n, d, s_max), True))
        entries.append(BoundEntry("ghz-qudit-relaxed", "1+2^(N-1)[min{S^(N-1),d}-1]",
                                  bound_ghz_qudit_relaxed(n, d, s_max), True))
    if family == "gghz" and n >= 2:
        phi = float(context.params.get("phi", math.pi / 4))
        entries.append(BoundEntry("generalized-ghz", "1+2^(N-1)|sin 2phi|", bound_generalized_ghz(n, phi), True))
    if family in ("product", "mixed", "separable"):
        entries.append(BoundEntry("separable", "1", 1.0, True, "separable states admit LHV models"))
    return entries


def compare(context, violation_value=None):
    """Evaluate every catalog bound for a context and check a computed violation against it"""
    n = context.n_parties
    s_max = max(context.settings)
    entries = [
        BoundEntry("general", "1+2^(N-1)[min{prod S/max S, prod d/max d}-1]",
                   bound_general(context.dims, context.settings), True),
        BoundEntry("universal-envelope", "(2S-1)^(N-1)", universal_envelope(n, s_max), True,
                   "S = max settings"),
    ]
    if context.equal_settings:
        s = context.settings[0]
        entries.append(BoundEntry("equal-settings", "min{(2S-1)^(N-1), 1+2^(N-1)(prod d/max d-1)}",
                                  bound_equal_settings(context.dims, n, s), True))
        entries.append(BoundEntry("equal-settings-relaxed", "1+2^(N-1)[min{S^(N-1),prod d/max d}-1]",
                                  bound_equal_settings_relaxed(context.dims, n, s), True))

    if n == 2:
        s1, s2 = context.settings
        d1, d2 = context.dims
        bipartite = bound_bipartite(s1, s2, d1, d2)
        entries.append(BoundEntry("bipartite", "2 min{S1,S2,d1,d2}-1", bipartite, True))
        dichotomic = context.outcome_counts == [2, 2]
        if dichotomic and max(context.settings) <= 2:
            entries.append(BoundEntry("dichotomic-2x2", "sqrt(2)", math.sqrt(2.0), True,
                                      "two settings and two outcomes per site"))
        l1, l2 = context.outcome_counts or (None, None)
        if l1 is not None:
            prior = prior_bipartite_bounds(l1, l2, s_max, max(context.dims))
            if prior["bound_i"] is not None:
                entries.append(BoundEntry("prior-dichotomic", "2K_G+1", prior["bound_i"], True,
                                          f"K_G upper endpoint {KG_UPPER}; improved: {bipartite < prior['bound_i']}"))
            region = d1 == d2 and d1 <= l1 * l2 * (KG_UPPER + 1.0)
            entries.append(BoundEntry("prior-outcomes", "2L1L2(K_G+1)-1", prior["bound_ii"], True,
                                      f"improved: {bipartite < prior['bound_ii']}; "
                                      f"condition d1=d2<=L1L2(K_G+1) as stated: {region}"))
            entries.append(BoundEntry("estimate-min-s-d", "min{S,d} (ESTIMATE)", prior["estimate_jp"], False,
                                      "holds up to an unknown constant; never a pass criterion"))

    if n == 3 and context.equal_settings:
        s = context.settings[0]
        entries.append(BoundEntry("tripartite", "min{(2S-1)^2, 4 prod d/max d-3}",
                                  bound_tripartite(s, *context.dims), True))
        if len(set(context.dims)) == 1:
            tight, relaxed = bound_tripartite_equal_dims(s, context.dims[0])
            entries.append(BoundEntry("tripartite-equal-dims", "min{(2S-1)^2, 4d^2-3}", tight, True))
            entries.append(BoundEntry("tripartite-equal-dims-relaxed", "4 min{S,d}^2-3", relaxed, True))

    entries += _family_entries(context)
    report = BoundReport(context, entries, violation_value)
    if not report.all_pass:
        names = ", ".join(e.name for e in report.failures)
        logger.warning(f"Violation {violation_value:.9f} exceeds applicable bounds: {names}")
    return report
