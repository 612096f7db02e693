"""Exact small-graph oracles."""
from .enumerate import (ParityTable, ZeroPartitionError, correlation_via_currents, current_event_prob,
                        event_grid, odd_sets, pair_event_prob, pair_law, pair_sum, partition_function, source_set,
                        trace_law, trace_law_prob)
from .fk import FkSpec, coupling_exact_check, coupling_law, coupling_tv, fk_exact, fk_law
from .identities import (DerivativeReport, SwitchingReport, backbone_weights, chain_rule_excess, chain_rule_probe,
                         decomposition_check, derivative_identity_probe, switching_events, switching_suite, ursell4,
                         ursell_representation_check, verify_switching)
from .spins import OracleSizeError, SpinEnsemble, spin_expectation, susceptibility
