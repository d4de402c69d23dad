from dataclasses import dataclass
from typing import Callable, Dict

from app.core.exception import structural_exception


@dataclass
class StageOutcome:
    name: str
    passed: bool
    message: str = ''


StageHandler = Callable[..., StageOutcome]


class StageRouter:
    """
    Collects stage handlers by name, the way the CLI looks them up
    """

    def __init__(self):
        self.routes: Dict[str, StageHandler] = {}

    def stage(self, name: str) -> Callable[[StageHandler], StageHandler]:
        def decorator(handler: StageHandler) -> StageHandler:
            if name in self.routes:
                structural_exception(f'stage {name!r} registered twice')
            self.routes[name] = handler
            return handler
        return decorator

    def include_router(self, other: 'StageRouter') -> None:
        for name, handler in other.routes.items():
            self.stage(name)(handler)

    def __getitem__(self, name: str) -> StageHandler:
        return self.routes[name]

    def __contains__(self, name: str) -> bool:
        return name in self.routes
