"""Annealing schedules: log-linear ramp of beta_max, SA or PT variant."""

import math

VARIANTS = ("SA", "PT")


class AnnealSchedule:
    """beta_max ramps log-linearly from beta_start to beta_upper.

    `ramp` is the progress value at which the ramp completes; progress
    beyond it holds beta_upper (truncation, never rescaling). Progress
    units are whatever the caller uses: query fraction in the limited
    regime, training steps in the unlimited regime.
    """

    def __init__(self, beta_min, beta_upper, beta_start, ramp, variant="SA"):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
        if not (0 < beta_min <= beta_start <= beta_upper):
            raise ValueError(
                f"need 0 < beta_min <= beta_start <= beta_upper, got "
                f"{beta_min}, {beta_start}, {beta_upper}"
            )
        if ramp <= 0:
            raise ValueError("ramp length must be positive")
        self.beta_min = float(beta_min)
        self.beta_upper = float(beta_upper)
        self.beta_start = float(beta_start)
        self.ramp = float(ramp)
        self.variant = variant

    @classmethod
    def limited(cls, variant="SA", beta_min=0.057, beta_upper=69.7):
        """Ramp completes at 33% of the query budget."""
        return cls(beta_min, beta_upper, beta_min, ramp=0.33, variant=variant)

    @classmethod
    def unlimited(cls, variant="SA", beta_min=0.1, beta_upper=100.0):
        """Starts at beta_max=1 and ramps over 2e4 training steps."""
        return cls(beta_min, beta_upper, 1.0, ramp=2e4, variant=variant)

    def beta_max(self, progress):
        if progress <= 0:
            return self.beta_start
        frac = progress / self.ramp
        if frac >= 1.0:
            return self.beta_upper
        lo = math.log(self.beta_start)
        hi = math.log(self.beta_upper)
        return math.exp(lo + frac * (hi - lo))

    def draw_beta(self, progress, rng):
        """Training beta for one step: beta_max (SA) or uniform (PT)."""
        hi = self.beta_max(progress)
        if self.variant == "PT":
            return float(rng.uniform(self.beta_min, hi))
        return hi
