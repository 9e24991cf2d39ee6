#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Banner and Logo Display
"""


def print_logo():
    """Print the dvbx logo"""
    logo = """
╭───────────────────────────────────────────────╮
│   ██████╗ ██╗   ██╗██████╗ ██╗  ██╗           │
│   ██╔══██╗██║   ██║██╔══██╗╚██╗██╔╝           │
│   ██║  ██║██║   ██║██████╔╝ ╚███╔╝            │
│   ██║  ██║╚██╗ ██╔╝██╔══██╗ ██╔██╗            │
│   ██████╔╝ ╚████╔╝ ██████╔╝██╔╝ ██╗           │
│   ╚═════╝   ╚═══╝  ╚═════╝ ╚═╝  ╚═╝           │
│   Discriminatively trained VBx diarization    │
╰───────────────────────────────────────────────╯
"""
    print(logo)


if __name__ == "__main__":
    print_logo()
