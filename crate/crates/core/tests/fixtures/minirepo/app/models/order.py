from .user import User
import numpy as np


class Order:
    owner = User
