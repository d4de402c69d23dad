from abc import ABCMeta
from typing import Optional

from db.base import ArtifactSession


class DalABC(metaclass=ABCMeta):
    def __init__(self, session: ArtifactSession, config: Optional[dict] = None):
        self.session = session
        # resolved experiment config, embedded in every JSON artifact
        self.config = config
