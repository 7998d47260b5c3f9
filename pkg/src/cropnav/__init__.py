"""Visual crop-row navigation simulator and library.

Subsystems: procedural field generation, a synthetic camera renderer,
vegetation-mask perception with sliding-window row tracking, an image-based
visual-servoing controller, the row-switching navigation state machine, a
deterministic closed-loop simulator, and field-coverage metrics.
"""

__version__ = "0.1.0"
