"""Tests for the Open Soup Rating package."""