"""Exception hierarchy. Each maps onto one CLI exit code."""


class ImpulsiveDelayError(Exception):
    pass


class ConfigurationError(ImpulsiveDelayError, ValueError):
    """Malformed input; ``field`` names the offending config key when known."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class DomainError(ImpulsiveDelayError, ValueError):
    pass


class IntegrabilityError(ImpulsiveDelayError, ValueError):
    pass


class MembershipError(ImpulsiveDelayError, ValueError):
    def __init__(self, t, message):
        self.t = t
        super().__init__(f"control left the admissible set at t={t!r}: {message}")


class HypothesisViolation(ConfigurationError):
    def __init__(self, hypothesis, message):
        self.hypothesis = hypothesis
        super().__init__(f"hypothesis {hypothesis} violated: {message}")


class NonconvergenceError(ImpulsiveDelayError, RuntimeError):
    def __init__(self, interval, last_diff, iterations):
        self.interval = interval
        self.last_diff = last_diff
        self.iterations = iterations
        super().__init__(
            f"Picard iteration on interval {interval} did not converge after "
            f"{iterations} iterations (last sup-norm difference {last_diff:.3e})"
        )


class EmptyFamilyError(ImpulsiveDelayError, RuntimeError):
    pass
