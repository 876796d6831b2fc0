"""Learned physical layer over Gaussian interference channels.

Modules
-------
nn           dense layers, softmax, cross-entropy, Adam, power normalization
channel      AWGN / m-user interference channel, Eb/N0 conventions, regime labels
autoencoder  the (n, k) transmitter/receiver, training, SER evaluation
adl          pilot-driven estimation of the coupling alpha and receiver update
harness      figure presets, config files, CSV and plot-data output
"""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
