"""Compiled scalar recursions: exact variance propagation, Euler stepping,
and the pseudo-likelihood loop.  Pure functions of their array arguments."""

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def _decay(v, beta, eta_eff, h):
    # variance relaxation between jumps: dv = (beta - eta_eff * v) dt, exact
    if eta_eff != 0.0:
        mean = beta / eta_eff
        return mean + (v - mean) * math.exp(-eta_eff * h)
    return v + beta * h


@njit(cache=True)
def exact_path_eval(jump_times, jump_sizes, beta, eta_eff, phi, sigma0,
                    eval_times):
    """Exact bivariate state at sorted eval_times (left limits and values).

    Between jumps the variance relaxes in closed form; at a jump s the level
    gains sigma(s-) * size and the variance is multiplied by
    1 + phi * size^2.  The level part covers jumps only.
    """
    n = eval_times.size
    sig2_left = np.empty(n)
    sig2_right = np.empty(n)
    g_left = np.empty(n)
    g_right = np.empty(n)

    jp = 0
    n_jumps = jump_times.size
    t_cur = 0.0
    v = sigma0
    g = 0.0
    for k in range(n):
        t = eval_times[k]
        while jp < n_jumps and jump_times[jp] < t:
            s = jump_times[jp]
            v = _decay(v, beta, eta_eff, s - t_cur)
            g = g + math.sqrt(v) * jump_sizes[jp]
            v = v * (1.0 + phi * jump_sizes[jp] * jump_sizes[jp])
            t_cur = s
            jp += 1
        vl = _decay(v, beta, eta_eff, t - t_cur)
        gl = g
        vr = vl
        gr = gl
        if jp < n_jumps and jump_times[jp] == t:
            gr = gl + math.sqrt(vl) * jump_sizes[jp]
            vr = vl * (1.0 + phi * jump_sizes[jp] * jump_sizes[jp])
            jp += 1
            t_cur = t
            v = vr
            g = gr
        sig2_left[k] = vl
        sig2_right[k] = vr
        g_left[k] = gl
        g_right[k] = gr
    return sig2_left, sig2_right, g_left, g_right


@njit(cache=True)
def euler_path_eval(jump_times, jump_sizes, beta, eta, phi, sigma_diff2,
                    sigma0, step, eval_times):
    """First-order Euler analogue of exact_path_eval with step size `step`."""
    n = eval_times.size
    sig2_left = np.empty(n)
    sig2_right = np.empty(n)
    g_left = np.empty(n)
    g_right = np.empty(n)

    jp = 0
    n_jumps = jump_times.size
    t_cur = 0.0
    v = sigma0
    g = 0.0
    for k in range(n):
        t = eval_times[k]
        while jp < n_jumps and jump_times[jp] < t:
            s = jump_times[jp]
            v = _euler_advance(v, beta, eta, phi, sigma_diff2, s - t_cur, step)
            g = g + math.sqrt(v) * jump_sizes[jp]
            v = v + phi * v * jump_sizes[jp] * jump_sizes[jp]
            t_cur = s
            jp += 1
        v = _euler_advance(v, beta, eta, phi, sigma_diff2, t - t_cur, step)
        t_cur = t
        vl = v
        gl = g
        if jp < n_jumps and jump_times[jp] == t:
            g = g + math.sqrt(v) * jump_sizes[jp]
            v = v + phi * v * jump_sizes[jp] * jump_sizes[jp]
            jp += 1
        sig2_left[k] = vl
        sig2_right[k] = v
        g_left[k] = gl
        g_right[k] = g
    return sig2_left, sig2_right, g_left, g_right


@njit(cache=True)
def _euler_advance(v, beta, eta, phi, sigma_diff2, length, step):
    if length <= 0.0:
        return v
    n_sub = int(math.ceil(length / step))
    if n_sub < 1:
        n_sub = 1
    h = length / n_sub
    for _ in range(n_sub):
        v = v + (beta - eta * v + phi * sigma_diff2 * v) * h
    return v


@njit(cache=True)
def pml_loglik(y, w_dt, beta, eta, phi, first_order):
    """Gaussian pseudo-log-likelihood of the returns under (beta, eta, phi).

    Runs the variance recursion from the stationary start beta/(eta - phi)
    with the (possibly reweighted) spacings w_dt, forming the one-step
    conditional variance either exactly or to first order.  Returns -inf on
    any invalid intermediate so optimizers reject the point.
    """
    if beta <= 0.0 or eta <= 0.0 or phi < 0.0 or eta <= phi:
        return -np.inf
    c = eta - phi
    mean = beta / c
    sig2 = mean
    acc = 0.0
    n = y.size
    for i in range(n):
        dt = w_dt[i]
        if first_order:
            rho2 = sig2 * dt
        else:
            rho2 = (sig2 - mean) * (math.expm1(c * dt) / c) + beta * dt / c
        if not rho2 > 0.0 or not np.isfinite(rho2):
            return -np.inf
        acc += -0.5 * (y[i] * y[i] / rho2 + math.log(rho2))
        decay = math.exp(-eta * dt)
        sig2 = beta * dt + decay * sig2 + phi * decay * y[i] * y[i]
        if not sig2 > 0.0 or not np.isfinite(sig2):
            return -np.inf
    return acc - 0.5 * n * LOG_2PI
