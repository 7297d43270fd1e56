"""Minimal account ledger fixture."""


class BankAccount:
    """Integer balance with a transaction counter; overdrafts are refused."""

    def __init__(self):
        self.balance = 0
        self.transactions = 0

    def deposit(self, amount: int) -> int:
        self.balance = self.balance + amount
        self.transactions = self.transactions + 1
        return self.balance

    def withdraw(self, amount: int) -> int:
        if amount > self.balance:
            raise ValueError("insufficient funds")
        self.balance = self.balance - amount
        self.transactions = self.transactions + 1
        return self.balance

    def getBalance(self) -> int:
        return self.balance

    def transactionCount(self) -> int:
        return self.transactions
