"""
SeesawOptimizer: alternating search for measurements maximizing a Bell functional
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

import bellbound_conf
from src.core.errors import ValidationError
from src.core.quantum import PovmFamily, joint_probabilities, projective_measurement
from src.core.scenario import behavior_average
from src.utils.helpers import get_logger, get_thread_count
from src.utils.linalg import contract_factors, hermitian_part, random_unitary


class SeesawResult:
    """Best measurements found and the Bell value they reach"""

    def __init__(self, povms, value, converged, history, restart_values):
        """Store the outcome of all restarts"""
        self.povms = povms
        self.value = float(value)
        self.converged = converged
        self.warning = not converged
        self.history = history
        self.restart_values = restart_values

    def __str__(self):
        """String representation"""
        return f"SeesawResult(value={self.value:.6f}, converged={self.converged})"


class SeesawOptimizer:
    """Class to maximize <psi> over projective measurements, one party at a time"""

    def __init__(self, restarts=None, seed=0, iteration_cap=None, threshold=None, threads=None):
        """Initialize the optimizer"""
        self.logger = get_logger(__name__)
        self.restarts = restarts or bellbound_conf.RESTARTS
        self.seed = int(seed)
        self.iteration_cap = iteration_cap or bellbound_conf.ITERATION_CAP
        self.threshold = threshold if threshold is not None else bellbound_conf.SWEEP_THRESHOLD
        self.threads = threads or get_thread_count()

        # Progress callback
        self.progress_callback = None
        self.total_steps = 0
        self.current_step = 0

    def set_progress_callback(self, callback):
        """Set a callback function for progress updates"""
        self.progress_callback = callback

    def update_progress(self, message, step=None):
        """Update the progress"""
        if step is not None:
            self.current_step = step
        else:
            self.current_step += 1
        progress = int((self.current_step / self.total_steps) * 100) if self.total_steps > 0 else 0
        self.logger.debug(f"{progress}% - {message}")
        if self.progress_callback:
            self.progress_callback(progress, message)

    def optimize(self, state, functional):
        """Best value over all restarts; ties go to the lowest restart index"""
        scenario = functional.scenario
        if scenario.n_parties != state.n_parties:
            raise ValidationError(
                f"Functional has {scenario.n_parties} parties but the state has {state.n_parties}")

        self.total_steps = self.restarts
        self.current_step = 0
        self.logger.info(f"Seesaw: {self.restarts} restarts, seed {self.seed}, {scenario}")

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                runs = list(pool.map(lambda r: self._run(state, functional, r), range(self.restarts)))
        else:
            runs = [self._run(state, functional, r) for r in range(self.restarts)]

        best = None
        for r, run in enumerate(runs):
            self.update_progress(f"Restart {r + 1}/{self.restarts}: value {run[1]:.9f}", r + 1)
            if best is None or run[1] > best[1]:
                best = run
        elements, value, converged, history = best
        povms = PovmFamily(scenario, elements)
        if not converged:
            self.logger.warning(f"Seesaw did not converge within {self.iteration_cap} sweeps")
        return SeesawResult(povms, value, converged, history, [run[1] for run in runs])

    def _run(self, state, functional, restart):
        """One restart from random projective measurements"""
        scenario = functional.scenario
        rng = np.random.default_rng([self.seed, restart])
        elements = []
        for n, d in enumerate(state.dims):
            stack = [projective_measurement(random_unitary(d, rng), scenario.outcome_counts[n])
                     for _ in range(scenario.settings[n])]
            elements.append(np.stack(stack))

        value = self._value(state, functional, elements)
        history = [value]
        converged = False
        for _ in range(self.iteration_cap):
            for n in range(scenario.n_parties):
                elements[n] = self._best_response(state, functional, elements, n)
            new_value = self._value(state, functional, elements)
            history.append(new_value)
            improvement = new_value - value
            value = new_value
            if improvement < self.threshold:
                converged = True
                break
        return elements, value, converged, history

    def _value(self, state, functional, elements):
        """Bell value of the current measurements"""
        povms = PovmFamily(functional.scenario, elements)
        return behavior_average(joint_probabilities(state, povms), functional)

    def _best_response(self, state, functional, elements, n):
        """Optimal projective measurements of party n with the others fixed"""
        scenario = functional.scenario
        k_ops = self._coefficient_operators(state, functional, elements, n)
        current = elements[n]
        updated = []
        for s in range(scenario.settings[n]):
            ops = [hermitian_part(k_ops[s, l]) for l in range(scenario.outcome_counts[n])]
            old_value = sum(np.trace(current[s, l] @ ops[l]).real for l in range(len(ops)))
            measurement, new_value = self._best_measurement(ops)
            updated.append(measurement if new_value > old_value else current[s])
        return np.stack(updated)

    def _coefficient_operators(self, state, functional, elements, n):
        """K[s_n, l_n] with <psi> = sum tr[M_n^(s_n)(l_n) K[s_n, l_n]] for fixed others"""
        scenario = functional.scenario
        big_n = scenario.n_parties
        effects = []
        for m, stack in enumerate(elements):
            effects.append(None if m == n else stack.reshape((-1,) + stack.shape[2:]))
        d = state.dims[n]
        blocks = contract_factors(state.matrix, state.dims, effects)
        shape = []
        for m in range(big_n):
            if m != n:
                shape += [scenario.settings[m], scenario.outcome_counts[m]]
        blocks = blocks.reshape(tuple(shape) + (d, d))

        # coefficients interleaved as (S_1, L_1, ..., S_N, L_N), party n moved to the front
        order = []
        for m in range(big_n):
            order += [m, big_n + m]
        interleaved = np.transpose(functional.coefficients, order)
        moved = np.moveaxis(interleaved, [2 * n, 2 * n + 1], [0, 1])
        rest = list(range(2, 2 * big_n))
        return np.tensordot(moved, blocks, axes=(rest, list(range(len(rest)))))

    def _best_measurement(self, ops):
        """Best projective measurement over candidate eigenbases, outcomes assigned greedily"""
        candidates = [np.linalg.eigh(op)[1] for op in ops]
        for i in range(len(ops)):
            for j in range(i + 1, len(ops)):
                candidates.append(np.linalg.eigh(ops[i] - ops[j])[1])

        best_value, best_elements = None, None
        for basis in candidates:
            # scores[j, l] = <u_j| K_l |u_j>
            scores = np.stack([np.einsum("ij,ik,kj->j", basis.conj(), op, basis).real for op in ops], axis=1)
            choice = np.argmax(scores, axis=1)
            value = float(scores[np.arange(len(choice)), choice].sum())
            if best_value is None or value > best_value:
                d = basis.shape[0]
                elements = np.zeros((len(ops), d, d), dtype=complex)
                for j, l in enumerate(choice):
                    elements[l] += np.outer(basis[:, j], basis[:, j].conj())
                best_value, best_elements = value, elements
        return best_elements, best_value


def seesaw_optimize(state, functional, restarts=None, seed=0, iteration_cap=None, threads=None):
    """Run the seesaw and return (PovmFamily, value)"""
    optimizer = SeesawOptimizer(restarts=restarts, seed=seed, iteration_cap=iteration_cap, threads=threads)
    result = optimizer.optimize(state, functional)
    return result.povms, result.value
