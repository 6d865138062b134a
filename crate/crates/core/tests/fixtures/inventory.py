"""Inventory bookkeeping used as a metrics fixture."""
import json

MAX_ITEMS = 500


class Item:
    """One stock line."""

    category = "misc"

    def __init__(self, name, qty=0):
        self.name = name
        self.qty = qty

    def restock(self, amount):
        # negative amounts are refunds
        if amount < 0:
            raise ValueError("amount")
        self.qty += amount  # running total
        return self.qty


class Perishable(Item):
    def __init__(self, name, qty, days):
        super().__init__(name, qty)
        self.days = days

    def expired(self, today):
        return today > self.days and self.qty > 0


def load(path):
    with open(path) as fh:
        data = json.load(fh)
    items = []
    for row in data:
        if row.get("days"):
            items.append(Perishable(row["name"], row["qty"], row["days"]))
        else:
            items.append(Item(row["name"], row["qty"]))
    return items


def total(items, limit=MAX_ITEMS):
    count = 0
    for it in items:
        count += it.qty
        if count > limit:
            return limit
    return count
