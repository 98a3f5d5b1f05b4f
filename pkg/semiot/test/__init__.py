# -*- coding: utf-8 -*-
################################################################################
# semiot/test/__init__.py
# Declaration of tests for the semiot package.

from ._model import (TestCostModel, TestStreams, TestTransportInstance)
from ._trace import TestTrace
from ._sa import TestKnownCostSA
from ._regression import (TestRidge, TestRLS)
from ._policy import (TestDeterministicSchedule, TestProbabilisticSchedule,
                      TestSelect)
from ._learner import (TestLearner, TestCheckpoint)
from ._oracle import (TestOracle, TestScoring, TestLazy)
from ._experiments import (TestSyntheticSpec, TestRateFit, TestSweep)
from ._voronoi import (TestTransform, TestRaster, TestFacilityInstance,
                       TestPartitionStudy)
from ._util import TestFormatting
from ._cli import (TestConfig, TestCommandLine)
