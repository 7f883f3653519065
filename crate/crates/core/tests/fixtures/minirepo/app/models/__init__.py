from . import user, order
