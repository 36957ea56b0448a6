"""framescope: narrative-frame analysis for podcast transcript corpora.

Library-first: each pipeline stage is an importable module (corpus,
filtering, entities, topics, prompting, features, importance, multitask,
analytics, service), with a thin `framescope` CLI on top. See demos/ for
narrative walkthroughs of each capability.
"""

__version__ = "0.1.0"

from .frames import FRAMES, Frame  # noqa: F401
