from randstop.optimize.adam import AdamState, adam_step
from randstop.optimize.backward import BackwardObjective, backward_fit
from randstop.optimize.base import FitReport, OptimizerConfig
from randstop.optimize.forward import ForwardObjective, forward_fit
