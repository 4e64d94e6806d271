from core.endpoints import Endpoint, route
from core.wire import MsgType

from .messages import DirectoryQuery, DirectoryResult


class DirectoryEndpoint(Endpoint):
    def __init__(self, authority, directory):
        super().__init__(authority)
        self.directory = directory

    @route(MsgType.DIR_REQ, request=DirectoryQuery)
    def query(self, ctx, body):
        if body.ca_id is not None:
            return DirectoryResult((self.directory.lookup(body.ca_id),))
        return DirectoryResult(tuple(self.directory.list_by_domain(body.domain or "", body.role)))
