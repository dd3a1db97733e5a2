"""
Emission of derived models: a JSON node table (the expression DAG, children before
parents) and LaTeX through sympy's printer.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import sympy

from modules.errors import ConfigError
from modules.symbolic_core import (AngleSum, AngleVar, Const, Cos, Neg, Param, Product, Quotient, ScalarExpr, Sin,
                                   Sum, topological_order)

MODEL_FORMAT = 'ntrailer-model/1'

_OPS = {Const: 'const', Param: 'param', Sin: 'sin', Cos: 'cos', Sum: 'sum', Product: 'product',
        Quotient: 'quotient', Neg: 'neg'}


def _angle_document(angle: AngleSum) -> Dict[str, Any]:
    return {'terms': [[var.name, coeff] for var, coeff in angle.terms], 'quarter_turns': angle.quarter_turns}


def node_table(roots: Sequence[ScalarExpr]) -> Tuple[List[Dict[str, Any]], Dict[int, int]]:
    """Serialize the DAG below `roots`; returns the table and a node-id -> row index map."""
    order = topological_order(roots)
    index = {id(node): position for position, node in enumerate(order)}
    table: List[Dict[str, Any]] = []
    for node in order:
        op = _OPS[type(node)]
        if isinstance(node, Const):
            table.append({'op': op, 'value': str(node.value)})
        elif isinstance(node, Param):
            table.append({'op': op, 'name': node.name})
        elif isinstance(node, (Sin, Cos)):
            table.append({'op': op, 'angle': _angle_document(node.angle)})
        else:
            table.append({'op': op, 'args': [index[id(child)] for child in node.children]})
    return table, index


def nodes_from_table(table: Sequence[Mapping[str, Any]]) -> List[ScalarExpr]:
    """Rebuild (interned) expressions from a node table."""
    nodes: List[ScalarExpr] = []
    try:
        for row in table:
            op = row['op']
            if op == 'const':
                nodes.append(Const(Fraction(row['value'])))
            elif op == 'param':
                nodes.append(Param(row['name']))
            elif op in ('sin', 'cos'):
                terms = [(AngleVar.from_name(name), int(coeff)) for name, coeff in row['angle']['terms']]
                angle = AngleSum.of(terms, int(row['angle']['quarter_turns']))
                nodes.append(Sin(angle) if op == 'sin' else Cos(angle))
            else:
                args = [nodes[position] for position in row['args']]
                if op == 'sum':
                    nodes.append(Sum(*args))
                elif op == 'product':
                    nodes.append(Product(*args))
                elif op == 'quotient':
                    nodes.append(Quotient(*args))
                elif op == 'neg':
                    nodes.append(Neg(*args))
                else:
                    raise ConfigError(f"Unknown node op {op!r}")
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed node table at row {len(nodes)}: {e}") from None
    return nodes


def model_document(model: Any, include_pfaffian: bool = False) -> Dict[str, Any]:
    """JSON-ready description of a KinematicModel."""
    roots: List[ScalarExpr] = list(model.F) + list(model.recursive_F)
    roots += [report.denominator for report in model.singularities]
    if include_pfaffian:
        roots += [expr for row in model.pfaffian.rows for expr in row.entries]
    table, index = node_table(roots)
    document: Dict[str, Any] = {
        'format': MODEL_FORMAT,
        'units': model.n,
        'layout': [{'name': c.name, 'kind': c.kind, 'unit': c.unit, 'wheel': c.wheel}
                   for c in model.layout.coordinates],
        'controls': list(model.control_names),
        'params': {name: model.spec.params[name] for name in sorted(model.spec.params)},
        'nodes': table,
        'F': {name: index[id(expr)] for name, expr in zip(model.F_names, model.F)},
        'recursive_F': {name: index[id(expr)] for name, expr in zip(model.F_names, model.recursive_F)},
        'singularities': [{'location': list(report.location), 'denominator': index[id(report.denominator)],
                           'description': report.description} for report in model.singularities],
    }
    if include_pfaffian:
        document['pfaffian'] = {
            'columns': list(model.layout.names),
            'rows': [{'source': list(row.source), 'kind': row.kind,
                      'coefficients': [index[id(expr)] for expr in row.entries]}
                     for row in model.pfaffian.rows],
        }
    return document


@dataclass(frozen=True)
class DecodedModel:
    F: Dict[str, ScalarExpr]
    recursive_F: Dict[str, ScalarExpr]
    params: Dict[str, float]
    layout: Tuple[str, ...]
    controls: Tuple[str, ...]
    pfaffian: Optional[List[List[ScalarExpr]]] = None


def read_model_json(document: Mapping[str, Any]) -> DecodedModel:
    """
    Decode a model document produced by model_document.

    Raises:
        ConfigError: On an unknown format tag or a malformed node table.
    """
    if document.get('format') != MODEL_FORMAT:
        raise ConfigError(f"Unsupported model format {document.get('format')!r}")
    nodes = nodes_from_table(document['nodes'])
    pfaffian = None
    if 'pfaffian' in document:
        pfaffian = [[nodes[position] for position in row['coefficients']] for row in document['pfaffian']['rows']]
    return DecodedModel(
        F={name: nodes[position] for name, position in document['F'].items()},
        recursive_F={name: nodes[position] for name, position in document['recursive_F'].items()},
        params={name: float(value) for name, value in document['params'].items()},
        layout=tuple(entry['name'] for entry in document['layout']),
        controls=tuple(document['controls']),
        pfaffian=pfaffian,
    )


# LaTeX

def latex_name(name: str) -> str:
    """psi_1 -> \\psi_{1}, theta_1_2 -> \\theta_{1,2}, a_1_2 -> a_{1,2}, f_psi_2 -> f_{\\psi_{2}}."""
    if name.startswith('f_psi_'):
        return rf"f_{{\psi_{{{name[6:]}}}}}"
    head, _, tail = name.partition('_')
    if head in ('psi', 'theta'):
        head = '\\' + head
    if name.startswith(('hf_', 'hr_')):
        unit, axis = tail.split('_')
        return rf"h^{{{head[1]}}}_{{{unit},{axis}}}"
    if not tail:
        return head
    return rf"{head}_{{{tail.replace('_', ',')}}}"


class _SympyBuilder:
    def __init__(self):
        self.symbols: Dict[str, sympy.Symbol] = {}
        self.cache: Dict[int, sympy.Expr] = {}

    def symbol(self, name: str) -> sympy.Symbol:
        if name not in self.symbols:
            self.symbols[name] = sympy.Symbol(name, real=True)
        return self.symbols[name]

    def angle(self, angle: AngleSum) -> sympy.Expr:
        total = sympy.Integer(angle.quarter_turns) * sympy.pi / 2
        for var, coeff in angle.terms:
            total += coeff * self.symbol(var.name)
        return total

    def build(self, expr: ScalarExpr) -> sympy.Expr:
        for node in topological_order([expr]):
            if id(node) in self.cache:
                continue
            if isinstance(node, Const):
                value = sympy.Rational(node.value.numerator, node.value.denominator)
            elif isinstance(node, Param):
                value = self.symbol(node.name)
            elif isinstance(node, Sin):
                value = sympy.sin(self.angle(node.angle), evaluate=False)
            elif isinstance(node, Cos):
                value = sympy.cos(self.angle(node.angle), evaluate=False)
            elif isinstance(node, Sum):
                value = sympy.Add(*(self.cache[id(c)] for c in node.terms), evaluate=False)
            elif isinstance(node, Product):
                value = sympy.Mul(*(self.cache[id(c)] for c in node.factors), evaluate=False)
            elif isinstance(node, Quotient):
                value = sympy.Mul(self.cache[id(node.numerator)],
                                  sympy.Pow(self.cache[id(node.denominator)], -1, evaluate=False), evaluate=False)
            else:
                value = sympy.Mul(-1, self.cache[id(node.child)], evaluate=False)
            self.cache[id(node)] = value
        return self.cache[id(expr)]

    def latex(self, expr: ScalarExpr) -> str:
        value = self.build(expr)
        names = {symbol: latex_name(name) for name, symbol in self.symbols.items()}
        return sympy.latex(value, symbol_names=names)


def to_latex(expr: ScalarExpr) -> str:
    return _SympyBuilder().latex(expr)


def model_latex(model: Any, include_pfaffian: bool = False) -> str:
    """LaTeX `align` block of the model column in its recursive form."""
    builder = _SympyBuilder()
    lines = [f"% kinematic model, {model.n} unit(s), controls: {', '.join(model.control_names)}",
             r"\begin{align}"]
    entries = [rf"{latex_name(name)} &= {builder.latex(expr)}" for name, expr in zip(model.F_names, model.recursive_F)]
    lines.append(' \\\\\n'.join(entries))
    lines.append(r"\end{align}")
    if include_pfaffian:
        rows = [' & '.join(builder.latex(expr) for expr in row.entries) for row in model.pfaffian.rows]
        lines.append(r"\begin{equation}")
        lines.append(r"A(x) = \begin{pmatrix}")
        lines.append(' \\\\\n'.join(rows))
        lines.append(r"\end{pmatrix}")
        lines.append(r"\end{equation}")
    return '\n'.join(lines) + '\n'
