# %% [markdown]
# # Expression language
# Metric and frame entries are strings in a small arithmetic language.
# Parsing gives a tree with source spans; evaluation works on scalars or arrays.

# %%
import numpy as np

from folcoh import expr

tree = expr.parse("lambda^(-2*t)")
print(expr.to_source(tree))
print(tree.kind, tree.value, [c.kind for c in tree.children])

# %%
# Power binds tighter than unary minus and associates to the right.
for src in ("-2^2", "2^3^2", "2^-1"):
    print(f"{src:8s} -> {expr.evaluate(expr.parse(src), {})}")

# %%
# Arrays flow straight through, so one parse serves a whole grid.
t = np.linspace(0, 1, 5)
lam = (3 + np.sqrt(5)) / 2
print(expr.evaluate(tree, {"t": t}, {"lambda": lam}))

# %%
# Errors carry the offending span.
try:
    expr.evaluate(expr.parse("1 + sqrt(x - 2)"), {"x": 1.0})
except expr.DomainError as e:
    print(type(e).__name__, e.span, e)
try:
    expr.parse("sin(pi*x")
except expr.ExprSyntaxError as e:
    print(type(e).__name__, e.position, e.expected)
