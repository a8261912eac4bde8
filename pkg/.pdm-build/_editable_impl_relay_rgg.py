from editables.redirector import RedirectingFinder as F
F.install()
F.map_module('relay_rgg', '/root/pkg/src/relay_rgg/__init__.py')