"""Radio-spectrum intrusion detection for IoT environments.

Modules: ``spectrum`` (sweeps, waterfalls, binary format), ``sweep_csv``
(hackrf_sweep-style captures), ``sim`` (synthetic smart home with attack
injection), ``features`` (per-slice statistics over sliding windows),
``autoencoder`` (numpy MLP), ``detector`` (scoring and threshold
calibration), ``evaluate`` (window-based matching and metrics),
``pipeline`` and ``cli``.
"""
__version__ = "0.1.0"
