"""Multimodal affect intensity estimation toolkit.

Kinematic feature extraction from recorded face/body/hand point
streams, per-modality anger classification with calibrated confidence,
linear intensity models on a 0-1 arousal scale, time-windowed
multimodal fusion, margin-based evaluation, and an annotation service.
"""

__version__ = "0.1.0"
