"""Robust pricing of defaultable zero-coupon bonds under intensity ambiguity."""
