"""Citation-network growth analysis toolkit.

Pipeline: load or synthesize a citation graph, embed nodes with biased
random walks + skip-gram, detect communities by Ward clustering with an
inconsistency-coefficient cut, then forecast each community's monthly
activity with three competing models (Hawkes, ARIMA, LSTM) scored by
MAPE and direction accuracy.
"""

__version__ = "0.1.0"

from .graph import (CitationGraph, GraphStats, Adjacency, load_graph, write_graph,
                    generate_synthetic_graph, as_undirected_adjacency)
from .walks import WalkParams, AliasTable, build_alias, transition_weight, generate_walks
from .embedding import EmbeddingParams, Embedding, pair_loss, train_embedding, gradient_check
from .cluster import (Dendrogram, ClusterAssignment, ward_linkage, inconsistency,
                      cut_by_inconsistency, cut_by_count)
from .pipeline import RunConfig, run_pipeline
from .hawkes import HawkesParams, EventSeries, detie, intensity, log_likelihood, simulate, fit_hawkes, expected_count, second_moment, hawkes_forecast
from .arima import ArimaModel, AdfResult, difference, fit_arma, select_order, arima_forecast, adf_test
from .lstm import LstmConfig, LstmWeights, CellState, cell_forward, bptt_gradients, train_lstm, lstm_forecast, PlateauSchedule
from .metrics import ClusterForecast, mape, direction_accuracy, filtered_table
