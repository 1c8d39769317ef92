"""quizwright: a client-server quiz testing suite.

Question banks live in XML, validated against a small schema language;
correct answers are stored only as MD5 digests of a canonical selection
string; a server supervises live sittings over a newline-framed JSON
protocol and an HTTP/WebSocket gateway; an administration CLI authors
banks, manages professor accounts and launches the server.
"""

__version__ = "0.1.0"
