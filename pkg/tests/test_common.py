import math
import pickle

from errbound.common import UNBOUNDED, Unbounded, fmt_real, is_unbounded


def test_sentinel_is_singleton_and_ordered():
    assert Unbounded() is UNBOUNDED
    assert pickle.loads(pickle.dumps(UNBOUNDED)) is UNBOUNDED
    assert UNBOUNDED > 1e308 and not UNBOUNDED < 5.0
    assert float(UNBOUNDED) == math.inf
    assert is_unbounded(UNBOUNDED) and not is_unbounded(math.inf)
    assert min(3.0, UNBOUNDED) == 3.0


def test_formatting():
    assert fmt_real(UNBOUNDED) == "inf"
    assert fmt_real(math.inf) == "inf"
    assert fmt_real(-0.0) == "0"
    assert fmt_real(0.1) == "0.10000000000000001"
    assert float(fmt_real(2**-0.5)) == 2**-0.5
