"""flycatcher: turn unit tests into stateful runtime checkers.

The pipeline discovers a subject project's tests, asks a pluggable chat
provider to generalize a target test into a checker over a shadow state,
validates the checker statically and dynamically with iterative feedback,
instruments the subject so the checker runs online, and scores checker
quality with desk-scale mutation testing.
"""

__version__ = "0.1.0"
