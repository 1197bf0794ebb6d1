"""Authenticated on-demand MANET routing (LARARP): protocol library,
deterministic discrete-event simulator, adversary models, and metrics."""

from .crypto import (ChainExhausted, KeyChain, SharedKeyTable, compute_tag,
                     generate_keychain, reveal_next, verify_reveal, verify_tag)
from .messages import (DataPacket, EncodingError, Rrep, Rreq, decode, encode,
                       hop_digest)
from .protocol import (NeighborTrustTable, NodeState, ProtocolConfig,
                       update_credit)
from .adversary import Attacker, AttackerProfile
from .simnet import (MobilityState, ScenarioConfig, ScenarioError, Simulation,
                     load_scenario, parse_scenario, run, step_mobility)
from .metrics import (MetricsReport, average_end_to_end_delay,
                      control_overhead, fold, packet_delivery_ratio)

__version__ = "0.1.0"
