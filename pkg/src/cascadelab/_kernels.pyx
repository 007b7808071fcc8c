# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cascade sampler.

Mirrors ``_fallback.run_block`` operation for operation so that both produce
identical histograms from the same generator.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, expm1

cnp.import_array()


cdef struct State:
    Py_ssize_t rep
    Py_ssize_t step
    double log_gap


cdef Py_ssize_t _advance(const double[::1] p, Py_ssize_t cap, double n_lines,
                         const double[::1] buf, Py_ssize_t pos,
                         State* st, Py_ssize_t reps, cnp.int64_t[::1] counts) noexcept nogil:
    cdef Py_ssize_t n = buf.shape[0]
    cdef double v, u
    while st.rep < reps:
        if pos >= n:
            return pos
        v = 1.0 - buf[pos]
        pos += 1
        # log(1 - U_(i)) accumulates log(V) / (N - i + 1)
        st.log_gap += log(v) / (n_lines - st.step + 1.0)
        u = -expm1(st.log_gap)
        if u > p[st.step - 1]:
            counts[st.step - 1] += 1
            st.rep += 1
            st.step = 1
            st.log_gap = 0.0
        elif st.step == cap:
            counts[cap] += 1
            st.rep += 1
            st.step = 1
            st.log_gap = 0.0
        else:
            st.step += 1
    return pos


def run_block(double[::1] p, long n_lines, long reps, object rng, long chunk=4096):
    """Histogram of capped failure counts for ``reps`` cascades.

    ``p`` holds the compositions ``p_1..p_cap``; bin ``cap`` collects every
    cascade that reached the cap.
    """
    cdef Py_ssize_t cap = p.shape[0]
    counts_arr = np.zeros(cap + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef State st
    st.rep = 0
    st.step = 1
    st.log_gap = 0.0
    cdef double[::1] buf
    cdef Py_ssize_t pos
    if cap == 0:
        counts_arr[0] = reps
        return counts_arr
    while st.rep < reps:
        buf = rng.random(chunk)
        pos = 0
        with nogil:
            pos = _advance(p, cap, <double>n_lines, buf, pos, &st, reps, counts)
    return counts_arr
