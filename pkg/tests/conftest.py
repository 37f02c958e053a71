import os
import sys

from hypothesis import HealthCheck, settings

settings.register_profile(
    "boxlab",
    deadline=None,
    max_examples=30,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("boxlab")

sys.path.insert(0, os.path.dirname(__file__))
