import attr
import bisect
import typing


@attr.s(auto_attribs=True, frozen=True)
class Coefficient:
    """
    A real coefficient t -> value.

    Exactly one of value, a table (times, values) or func is used.  Tables are
    piecewise constant from the left: values[i] holds on [times[i], times[i+1]).
    """

    value: typing.Optional[float] = None
    times: typing.Tuple[float, ...] = attr.ib(default=(), converter=tuple)
    values: typing.Tuple[float, ...] = attr.ib(default=(), converter=tuple)
    func: typing.Optional[typing.Callable[[float], float]] = None
    label: str = ""

    def __attrs_post_init__(self):
        used = sum([self.value is not None, bool(self.times), self.func is not None])
        if used != 1:
            raise ValueError("a coefficient needs exactly one of value, table or func")
        if len(self.times) != len(self.values):
            raise ValueError("coefficient table needs as many values as times")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("coefficient table times must be strictly increasing")

    @classmethod
    def const(cls, value):
        return cls(value=float(value), label=f"const:{value}")

    @classmethod
    def table(cls, times, values, label="table"):
        return cls(times=[float(t) for t in times], values=[float(v) for v in values], label=label)

    @classmethod
    def of(cls, obj):
        """ coerce a number, callable or Coefficient """
        if isinstance(obj, Coefficient):
            return obj
        if callable(obj):
            return cls(func=obj, label=getattr(obj, "__name__", "callable"))
        return cls.const(obj)

    @property
    def is_constant(self):
        return self.value is not None

    @property
    def breakpoints(self):
        return self.times[1:]

    def __call__(self, t):
        if self.value is not None:
            return self.value
        if self.func is not None:
            return float(self.func(t))
        idx = bisect.bisect_right(self.times, t + 1e-12 * max(1.0, abs(t))) - 1
        return self.values[max(idx, 0)]


def coefficient_list(items):
    return [Coefficient.of(c) for c in items]
