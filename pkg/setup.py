#! /usr/bin/env python
################################################################################

import os
from setuptools import setup

# Get the version from __init__.py
with open(os.path.join('semiot', '__init__.py'), 'rt') as fl:
    lns = fl.readlines()
version = next(ln for ln in lns if "__version__ = " in ln)
version = version.split('"')[1]

setup(
    name='semiot',
    version=version,
    description='Semidiscrete optimal transport with known and learned costs',
    keywords='optimal-transport stochastic-approximation bandits ridge',
    license='MIT',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: POSIX',
        'Operating System :: Unix',
        'Operating System :: MacOS',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Mathematics'],
    packages=['semiot',
              'semiot.abc',
              'semiot.util',
              'semiot.test'],
    package_data={'': ['LICENSE.txt']},
    zip_safe=False,
    include_package_data=True,
    entry_points={'console_scripts': ['semiot = semiot._cli:console_main']},
    install_requires=['phamt >= 0.1.7',
                      'numpy >= 1.22',
                      'scipy >= 1.8'])
