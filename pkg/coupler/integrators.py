def integrate_rk4(y, dt, f):
    """
    Computes y_{n+1} from y_n with one classic fourth-order Runge-Kutta step.
    Using this function one can solve autonomous differential equations

    \\frac{d}{dt} y = f(y)

    numerically; y may be a complex array of any shape.

    Parameters
    ----------
    y : np.ndarray
        state of the system
    dt : float
        time step
    f : function
        computes the right hand side of the differential equation from y

    Returns
    -------
    np.ndarray
        the state of the system after time step dt has passed
    """
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (k1 + 2 * k2 + 2 * k3 + k4) * (dt / 6)
