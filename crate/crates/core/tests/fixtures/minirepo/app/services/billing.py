from app.models.order import Order
from app.models.order import Order
import requests
