"""
tests

Initialization for the GraspLab test suite.
- Makes the test modules a package so they can share helpers from conftest.py
  (write_obj, top_down_camera, posed).
- Shared fixtures live in conftest.py.

Author: GraspLab Team
"""
