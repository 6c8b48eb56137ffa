from src.discovery.handlers import EdgeHandler, RelayHandler, RendezvousHandler
from src.discovery.interfaces import RoleHandler
from src.discovery.peer import PeerRole

ROLE_HANDLERS: dict[PeerRole, tuple[RoleHandler, ...]] = {
    PeerRole.EDGE: (EdgeHandler(),),
    PeerRole.RENDEZVOUS: (RendezvousHandler(),),
    PeerRole.RELAY: (RelayHandler(),),
    PeerRole.SUPER: (RendezvousHandler(), RelayHandler()),
}
