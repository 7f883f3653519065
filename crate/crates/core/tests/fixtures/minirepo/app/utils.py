from app.models import *


def helper(x):
    return x
