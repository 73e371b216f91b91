# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled symmetrized split-step loop backed by FFTW."""

from libc.math cimport cos, sin, isfinite
from libc.string cimport memcpy

import numpy as np

cdef extern from "complex.h":
    pass

cdef extern from "fftw3.h":
    ctypedef double fftw_complex[2]
    ctypedef struct fftw_plan_s:
        pass
    ctypedef fftw_plan_s *fftw_plan
    fftw_plan fftw_plan_dft_1d(int n, fftw_complex *inp, fftw_complex *out,
                               int sign, unsigned flags) nogil
    void fftw_execute(const fftw_plan p) nogil
    void fftw_destroy_plan(fftw_plan p) nogil
    void *fftw_malloc(size_t n) nogil
    void fftw_free(void *p) nogil
    int FFTW_FORWARD
    int FFTW_BACKWARD
    unsigned FFTW_ESTIMATE


cdef inline void _multiply(double *buf, const double *mult, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    cdef double ar, ai, br, bi
    for k in range(n):
        ar = buf[2 * k]
        ai = buf[2 * k + 1]
        br = mult[2 * k]
        bi = mult[2 * k + 1]
        buf[2 * k] = ar * br - ai * bi
        buf[2 * k + 1] = ar * bi + ai * br


cdef inline double _kerr(double *buf, double gamma_h, Py_ssize_t n) noexcept nogil:
    # returns sum |A|^2 so the caller can detect NaN/overflow for free
    cdef Py_ssize_t k
    cdef double re, im, p, ph, c, s, total = 0.0
    for k in range(n):
        re = buf[2 * k]
        im = buf[2 * k + 1]
        p = re * re + im * im
        total += p
        ph = gamma_h * p
        c = cos(ph)
        s = sin(ph)
        buf[2 * k] = re * c - im * s
        buf[2 * k + 1] = re * s + im * c
    return total


def run(double complex[::1] samples, double complex[::1] half,
        double complex[::1] full, double gamma_h, int n_steps):
    """Advance ``samples`` in place through ``n_steps`` symmetrized steps.

    ``half`` and ``full`` are spectral multipliers already divided by the
    transform length (FFTW transforms are unnormalized). Returns -1 on
    success, otherwise the index of the step that produced non-finite values.
    """
    cdef Py_ssize_t n = samples.shape[0]
    if half.shape[0] != n or full.shape[0] != n:
        raise ValueError("multiplier length does not match samples")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")

    cdef double *buf = <double *> fftw_malloc(sizeof(double) * 2 * n)
    if buf == NULL:
        raise MemoryError()
    cdef fftw_plan to_spec, to_time
    cdef int step, failed = -1
    cdef double total
    cdef const double *hp = <const double *> &half[0]
    cdef const double *fp = <const double *> &full[0]

    # plan on the buffer before filling it; ESTIMATE keeps the plan (and the
    # floating-point result) deterministic from run to run
    to_spec = fftw_plan_dft_1d(<int> n, <fftw_complex *> buf, <fftw_complex *> buf,
                               FFTW_BACKWARD, FFTW_ESTIMATE)
    to_time = fftw_plan_dft_1d(<int> n, <fftw_complex *> buf, <fftw_complex *> buf,
                               FFTW_FORWARD, FFTW_ESTIMATE)
    memcpy(buf, &samples[0], sizeof(double) * 2 * n)
    with nogil:
        fftw_execute(to_spec)
        _multiply(buf, hp, n)
        for step in range(n_steps):
            fftw_execute(to_time)
            total = _kerr(buf, gamma_h, n)
            if not isfinite(total):
                failed = step
                break
            fftw_execute(to_spec)
            if step == n_steps - 1:
                _multiply(buf, hp, n)
            else:
                _multiply(buf, fp, n)
        if failed < 0:
            fftw_execute(to_time)
    memcpy(&samples[0], buf, sizeof(double) * 2 * n)
    fftw_destroy_plan(to_spec)
    fftw_destroy_plan(to_time)
    fftw_free(buf)
    return failed
