"""Tests for the BankAccount fixture."""

import pytest

from bankaccount import BankAccount


def test_deposits_accumulate():
    account = BankAccount()
    assert account.deposit(100) == 100
    assert account.deposit(50) == 150
    assert account.getBalance() == 150


def test_withdraw_reduces_balance():
    account = BankAccount()
    account.deposit(100)
    assert account.withdraw(40) == 60
    assert account.getBalance() == 60


def test_overdraft_is_refused():
    account = BankAccount()
    account.deposit(10)
    with pytest.raises(ValueError):
        account.withdraw(11)
    assert account.getBalance() == 10


def test_transactions_count_both_directions():
    account = BankAccount()
    account.deposit(5)
    account.deposit(5)
    account.withdraw(3)
    assert account.transactionCount() == 3
