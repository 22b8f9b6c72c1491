# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled piecewise propagation kernel.

Same contract as _stepper_py: apply U_k = expm(-2j*pi*H_k*dt_k) in sequence
to a 4-dim state vector or 4x4 density matrix.  Each Hermitian step
Hamiltonian is diagonalized with LAPACK zheev.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin
from scipy.linalg.cython_lapack cimport zheev

cnp.import_array()

BACKEND = "compiled"

DEF N = 4
DEF TWO_PI = 6.283185307179586


cdef int _step_unitary(double complex* h, double dt, double complex* u) nogil:
    """u <- expm(-2j*pi*h*dt) for Hermitian 4x4 h (row-major in/out)."""
    cdef double complex a[N * N]
    cdef double w[N]
    cdef double complex work[64]
    cdef double rwork[3 * N]
    cdef int n = N, lwork = 64, info = 0
    cdef int i, j, k
    cdef double ph
    cdef double complex phase[N]
    cdef char jobz = b'V', uplo = b'L'

    # LAPACK expects column-major; store a[i + j*N] = h[j*N + i]^T = h[i][j]
    # transposed.  Passing the transpose of a Hermitian matrix equals its
    # conjugate, so the returned eigenvectors are the conjugates of the
    # eigenvectors of h; we conjugate back when assembling u.
    for i in range(N):
        for j in range(N):
            a[i + j * N] = h[j * N + i]
    zheev(&jobz, &uplo, &n, a, &n, w, work, &lwork, rwork, &info)
    if info != 0:
        return info
    # Columns of (column-major) a are eigenvectors of conj(h) = transpose(h);
    # eigenvectors of h are their conjugates: v_k[i] = conj(a[i + k*N]).
    for k in range(N):
        ph = -TWO_PI * w[k] * dt
        phase[k] = cos(ph) + 1j * sin(ph)
    # u = V diag(phase) V^H with V[i][k] = conj(a[i + k*N])
    for i in range(N):
        for j in range(N):
            u[i * N + j] = 0
            for k in range(N):
                u[i * N + j] = u[i * N + j] + (
                    phase[k] * a[i + k * N].conjugate() * a[j + k * N]
                )
    return 0


def propagate_vector(psi, h_stack, dts):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.array(psi, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] hs = np.ascontiguousarray(h_stack, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ts = np.ascontiguousarray(dts, dtype=np.float64)
    cdef double complex u[N * N]
    cdef double complex tmp[N]
    cdef Py_ssize_t s, i, j
    cdef int info
    for s in range(hs.shape[0]):
        info = _step_unitary(&hs[s, 0, 0], ts[s], u)
        if info != 0:
            raise np.linalg.LinAlgError(f"zheev failed at step {s} (info={info})")
        for i in range(N):
            tmp[i] = 0
            for j in range(N):
                tmp[i] = tmp[i] + u[i * N + j] * out[j]
        for i in range(N):
            out[i] = tmp[i]
    return out


def propagate_density(rho, h_stack, dts):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.array(rho, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] hs = np.ascontiguousarray(h_stack, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ts = np.ascontiguousarray(dts, dtype=np.float64)
    cdef double complex u[N * N]
    cdef double complex tmp[N * N]
    cdef Py_ssize_t s, i, j, k
    cdef int info
    cdef double complex acc
    for s in range(hs.shape[0]):
        info = _step_unitary(&hs[s, 0, 0], ts[s], u)
        if info != 0:
            raise np.linalg.LinAlgError(f"zheev failed at step {s} (info={info})")
        # tmp = u @ out
        for i in range(N):
            for j in range(N):
                acc = 0
                for k in range(N):
                    acc = acc + u[i * N + k] * out[k, j]
                tmp[i * N + j] = acc
        # out = tmp @ u^H
        for i in range(N):
            for j in range(N):
                acc = 0
                for k in range(N):
                    acc = acc + tmp[i * N + k] * u[j * N + k].conjugate()
                out[i, j] = acc
    return out
