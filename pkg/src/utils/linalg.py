"""
Dense tensor-product kernels shared by the quantum and dilation modules
"""

import numpy as np


def hermitian_part(matrix):
    """Return (M + M^dagger) / 2"""
    matrix = np.asarray(matrix)
    return 0.5 * (matrix + matrix.conj().T)


def is_hermitian(matrix, tol=1e-10):
    """Check self-adjointness entrywise within tol"""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= tol)


def min_eigenvalue(matrix):
    """Smallest eigenvalue of a self-adjoint matrix"""
    return float(np.linalg.eigvalsh(hermitian_part(matrix))[0])


def trace_norm(matrix):
    """Trace (nuclear) norm of a self-adjoint matrix"""
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(matrix)))))


def kron_all(matrices):
    """Kronecker product of a sequence of matrices, left to right"""
    result = np.ones((1, 1), dtype=complex)
    for m in matrices:
        result = np.kron(result, m)
    return result


def contract_factors(matrix, dims, effects):
    """Contract factors of an operator on a tensor product against effect stacks

    `effects[k]` is either an array of shape (n_k, d_k, d_k) or None. For every
    contracted factor the result carries one axis of length n_k holding
    tr_k[M (E_k(l) on factor k)]; factors given as None stay open. The result has
    shape (n_k for contracted k...) followed by (D_open, D_open) when any
    factor is open.
    """
    dims = list(dims)
    k_total = len(dims)
    t = np.asarray(matrix).reshape(dims + dims)
    labels = [("r", k) for k in range(k_total)] + [("c", k) for k in range(k_total)]

    for k, stack in enumerate(effects):
        if stack is None:
            continue
        stack = np.asarray(stack)
        row_axis = labels.index(("r", k))
        col_axis = labels.index(("c", k))
        # tr[M E] = sum_ij M_ij E_ji
        t = np.tensordot(t, stack, axes=([row_axis, col_axis], [2, 1]))
        labels = [lab for lab in labels if lab not in (("r", k), ("c", k))] + [("o", k)]

    open_factors = [k for k in range(k_total) if effects[k] is None]
    order = [labels.index(("o", k)) for k in range(k_total) if effects[k] is not None]
    order += [labels.index(("r", k)) for k in open_factors]
    order += [labels.index(("c", k)) for k in open_factors]
    t = np.transpose(t, order)

    if not open_factors:
        return t
    d_open = int(np.prod([dims[k] for k in open_factors]))
    outcome_shape = t.shape[:len(t.shape) - 2 * len(open_factors)]
    return t.reshape(tuple(outcome_shape) + (d_open, d_open))


def partial_trace(matrix, dims, keep):
    """Partial trace keeping the factors listed in `keep` (in ascending order)"""
    keep = set(keep)
    effects = []
    for k, d in enumerate(dims):
        effects.append(None if k in keep else np.eye(d)[np.newaxis, :, :])
    reduced = contract_factors(matrix, dims, effects)
    d_keep = int(np.prod([dims[k] for k in sorted(keep)])) if keep else 1
    return reduced.reshape(d_keep, d_keep)


def positive_projector(matrix, negative=False):
    """Projector onto the positive (or negative) eigenspace of a self-adjoint matrix"""
    values, vectors = np.linalg.eigh(hermitian_part(matrix))
    mask = values < 0 if negative else values > 0
    selected = vectors[:, mask]
    return selected @ selected.conj().T


def random_unitary(d, rng):
    """Haar-random unitary from the QR decomposition of a Ginibre matrix"""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_unit_vector(d, rng):
    """Uniformly random complex unit vector"""
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_hermitian(d, rng):
    """Random self-adjoint matrix from the Gaussian unitary ensemble"""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return hermitian_part(z)


def random_projector(d, rank, rng):
    """Projector onto the span of `rank` columns of a Haar-random unitary"""
    columns = random_unitary(d, rng)[:, :rank]
    return columns @ columns.conj().T
