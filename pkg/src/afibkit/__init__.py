"""afibkit: atrial fibrillation detection from single-lead ECG recordings.

Subpackages cover the full pipeline: WFDB record parsing (`wfdb_io`),
watch-grade signal preparation (`signal_prep`), RR-interval statistics
(`rr_stats`), spectrograms (`spectro`), a small dense-tensor neural network
engine (`nn_core`), the two CNN classifiers (`models`), metrics (`metrics`)
and the command line front end (`cli`).
"""

__version__ = "0.1.0"
