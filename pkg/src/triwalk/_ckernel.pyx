# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled single-step kernel; same contract as ``_npkernel.step_kernel``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def step_kernel(const double complex[:, :, ::1] amp, coin):
    cdef Py_ssize_t n = amp.shape[0]
    cdef const double complex[:, ::1] c = np.ascontiguousarray(coin, dtype=np.complex128)
    out_arr = np.zeros((n + 2, n + 2, 3), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef double complex c00 = c[0, 0], c01 = c[0, 1], c02 = c[0, 2]
    cdef double complex c10 = c[1, 0], c11 = c[1, 1], c12 = c[1, 2]
    cdef double complex c20 = c[2, 0], c21 = c[2, 1], c22 = c[2, 2]
    cdef double complex x, y, z
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(n):
                x = amp[i, j, 0]
                y = amp[i, j, 1]
                z = amp[i, j, 2]
                if x == 0 and y == 0 and z == 0:
                    continue
                out[i + 2, j + 1, 0] = c00 * x + c01 * y + c02 * z
                out[i + 1, j + 2, 1] = c10 * x + c11 * y + c12 * z
                out[i, j, 2] = c20 * x + c21 * y + c22 * z
    return out_arr
