"""
JSON file formats for scenarios, functionals, behaviors, states, POVMs,
source operators and certificates

Setting and outcome indices are 1-based in files. Complex matrix entries
are [re, im] pairs in row-major nested lists.
"""

import json

import numpy as np

from src.core.errors import ValidationError
from src.utils.helpers import is_valid_input_file


def load_json(path):
    """Read a JSON object, turning parse failures into line-numbered errors"""
    if not is_valid_input_file(path):
        raise ValidationError(f"Not a readable .json file: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}:{e.lineno}:{e.colno}: {e.msg}")
    except OSError as e:
        raise ValidationError(f"Cannot read {path}: {str(e)}")
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: JSON root must be an object")
    return data


def _plain(value):
    """json.dumps fallback for numpy scalars and arrays"""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def canonical_json(data):
    """Deterministic JSON text: sorted keys, fixed indentation, full doubles"""
    return json.dumps(data, sort_keys=True, indent=2, default=_plain) + "\n"


def dump_json(data, path):
    """Write canonical JSON to a file"""
    with open(path, "w", encoding="utf-8") as f:
        f.write(canonical_json(data))


def _field(data, key, where):
    if key not in data:
        raise ValidationError(f"{where}: missing field '{key}'")
    return data[key]


def complex_to_list(matrix):
    """Matrix as nested rows of [re, im] pairs"""
    matrix = np.asarray(matrix, dtype=complex)
    return np.stack([matrix.real, matrix.imag], axis=-1).tolist()


def complex_from_list(data, where="matrix"):
    """Inverse of complex_to_list; plain real entries are accepted too"""
    try:
        array = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: entries must be numbers or [re, im] pairs")
    if array.ndim == 3 and array.shape[-1] == 2:
        return array[..., 0] + 1j * array[..., 1]
    if array.ndim == 2:
        return array.astype(complex)
    raise ValidationError(f"{where}: unexpected array shape {array.shape}")


def scenario_to_dict(scenario):
    """{"parties", "settings", "outcomes"}"""
    return {
        "parties": scenario.n_parties,
        "settings": list(scenario.settings),
        "outcomes": [list(values) for values in scenario.outcomes],
    }


def scenario_from_dict(data, where="scenario"):
    """Parse and validate a scenario object"""
    from src.core.scenario import ScenarioSpec

    return ScenarioSpec(_field(data, "parties", where), _field(data, "settings", where),
                        _field(data, "outcomes", where))


def functional_to_dict(functional):
    """{"scenario", "terms": [{"s", "l", "c"}]} with terms in sorted key order"""
    terms = []
    for (settings, indices), c in sorted(functional.terms.items()):
        if c == 0.0:
            continue
        terms.append({"s": [s + 1 for s in settings], "l": [l + 1 for l in indices], "c": c})
    return {"scenario": scenario_to_dict(functional.scenario), "terms": terms}


def functional_from_dict(data, where="functional"):
    """Parse a functional, converting 1-based indices"""
    from src.core.scenario import BellFunctional

    scenario = scenario_from_dict(_field(data, "scenario", where))
    terms = {}
    for i, term in enumerate(_field(data, "terms", where)):
        label = f"{where}: term {i + 1}"
        try:
            settings = tuple(int(s) - 1 for s in _field(term, "s", label))
            indices = tuple(int(l) - 1 for l in _field(term, "l", label))
            c = float(_field(term, "c", label))
        except (TypeError, ValueError):
            raise ValidationError(f"{label}: indices must be integers and c a number")
        key = (settings, indices)
        terms[key] = terms.get(key, 0.0) + c
    return BellFunctional(scenario, terms)


def behavior_to_dict(behavior):
    """{"scenario", "tables": {"s_1,..,s_N": row-major list}, "signed"}"""
    scenario = behavior.scenario
    tables = {}
    for settings in scenario.setting_tuples:
        key = ",".join(str(s + 1) for s in settings)
        tables[key] = behavior.table(settings).ravel().tolist()
    return {"scenario": scenario_to_dict(scenario), "tables": tables, "signed": behavior.signed}


def behavior_from_dict(data, where="behavior"):
    """Parse a behavior; every setting tuple must be present"""
    from src.core.scenario import Behavior

    scenario = scenario_from_dict(_field(data, "scenario", where))
    raw = _field(data, "tables", where)
    tables = np.zeros(scenario.table_shape)
    for settings in scenario.setting_tuples:
        key = ",".join(str(s + 1) for s in settings)
        if key not in raw:
            raise ValidationError(f"{where}: missing table '{key}'")
        values = np.asarray(raw[key], dtype=float)
        if values.size != int(np.prod(scenario.outcome_counts)):
            raise ValidationError(f"{where}: table '{key}' has {values.size} entries")
        tables[settings] = values.reshape(scenario.outcome_counts)
    return Behavior(scenario, tables, signed=bool(data.get("signed", False)))


def state_to_dict(state):
    """{"dims", "matrix", "family"}"""
    return {"dims": list(state.dims), "matrix": complex_to_list(state.matrix), "family": state.family}


def state_from_dict(data, where="state"):
    """Parse a density matrix file"""
    from src.core.quantum import DensityState, recognize_family

    matrix = complex_from_list(_field(data, "matrix", where), where)
    state = DensityState(_field(data, "dims", where), matrix)
    return recognize_family(state, data.get("family"))


def povms_to_dict(povms):
    """{"scenario", "elements": [party][setting][outcome] -> matrix}"""
    elements = [[[complex_to_list(e) for e in setting] for setting in stack] for stack in povms.elements]
    return {"scenario": scenario_to_dict(povms.scenario), "elements": elements}


def povms_from_dict(data, where="povms"):
    """Parse a POVM family file"""
    from src.core.quantum import PovmFamily

    scenario = scenario_from_dict(_field(data, "scenario", where))
    raw = _field(data, "elements", where)
    if len(raw) != scenario.n_parties:
        raise ValidationError(f"{where}: expected {scenario.n_parties} parties, got {len(raw)}")
    elements = []
    for n, party in enumerate(raw):
        stack = [[complex_from_list(e, f"{where}: party {n + 1}") for e in setting] for setting in party]
        elements.append(np.array(stack, dtype=complex))
    return PovmFamily(scenario, elements)


def source_operator_to_dict(source):
    """{"dims", "copies", "matrix"}"""
    return {"dims": list(source.site_dims), "copies": list(source.copies),
            "matrix": complex_to_list(source.matrix)}
