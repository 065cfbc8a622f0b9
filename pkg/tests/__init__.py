import pytest


pytest.register_assert_rewrite("localmax.localmax_quickstart")
