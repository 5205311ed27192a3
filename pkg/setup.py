from __future__ import absolute_import, division, print_function

# Standard imports
import os
from setuptools import setup, find_packages

# Begin setup
setup_keywords = dict()
setup_keywords['name'] = 'fracctl'
setup_keywords['description'] = 'Controllability of fractional-order Caputo systems'
setup_keywords['license'] = 'BSD'
setup_keywords['version'] = '0.1.0'
# Use README.md as long_description.
setup_keywords['long_description'] = ''
if os.path.exists('README.md'):
    with open('README.md') as readme:
        setup_keywords['long_description'] = readme.read()
setup_keywords['long_description_content_type'] = 'text/markdown'
setup_keywords['provides'] = [setup_keywords['name']]
setup_keywords['python_requires'] = '>=3.8'
setup_keywords['install_requires'] = [
    'numpy', 'scipy', 'scikit-learn', 'tqdm']
setup_keywords['extras_require'] = {'test': ['pytest']}
setup_keywords['entry_points'] = {
    'console_scripts': ['fracctl=fracctl.cli:main']}
setup_keywords['zip_safe'] = False
setup_keywords['packages'] = find_packages(exclude=['examples', 'examples.*'])
setup_keywords['tests_require'] = ['pytest']

setup(**setup_keywords)
