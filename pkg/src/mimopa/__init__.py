"""Link-level simulator for massive MIMO downlink with nonlinear power amplifiers."""

__version__ = "0.1.0"
