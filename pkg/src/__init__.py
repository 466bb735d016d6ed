"""
Timing-Skew Navigation Simulator

Two-camera marker localization and the error introduced when the cameras
capture a moving marker at slightly different times.
"""

__version__ = "1.0.0"
