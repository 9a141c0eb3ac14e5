#include "dynheights/field.hpp"

#include <cctype>

namespace dynheights {

std::string poly_to_string(const QPoly& p, const std::string& var) {
    if (p.is_zero()) return "0";
    std::string out;
    for (long k = p.degree(); k >= 0; --k) {
        Rat c = p.coeff(static_cast<size_t>(k));
        if (c == 0) continue;
        bool first = out.empty();
        if (c < 0) {
            out += first ? "-" : " - ";
            c = -c;
        } else if (!first) {
            out += " + ";
        }
        if (k == 0 || c != 1) {
            out += c.get_str();
            if (k > 0) out += "*";
        }
        if (k > 0) {
            out += var;
            if (k > 1) out += "^" + std::to_string(k);
        }
    }
    return out;
}

std::string field_to_string(const FieldElement& x) {
    if (x.mode == Mode::Q) return x.q.get_str();
    if (x.rf.den.degree() == 0) return poly_to_string(x.rf.num);
    return "(" + poly_to_string(x.rf.num) + ")/(" + poly_to_string(x.rf.den) + ")";
}

namespace {

struct Scanner {
    const std::string& s;
    size_t i = 0;
    explicit Scanner(const std::string& str) : s(str) {}

    void skip_ws() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool done() {
        skip_ws();
        return i >= s.size();
    }
    char peek() {
        skip_ws();
        return i < s.size() ? s[i] : '\0';
    }
    bool eat(char c) {
        skip_ws();
        if (i < s.size() && s[i] == c) {
            ++i;
            return true;
        }
        return false;
    }
    Int integer() {
        skip_ws();
        size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) throw std::invalid_argument("expected digits in '" + s + "' at " + std::to_string(i));
        Int v(s.substr(i, j - i));
        i = j;
        return v;
    }
};

// term := [sign] ( rational ['*'? t-part] | t-part ), t-part := 't' ['^' int]
QPoly parse_poly_body(Scanner& sc) {
    std::vector<Rat> coeffs;
    auto bump = [&](long k, const Rat& c) {
        if (static_cast<size_t>(k) >= coeffs.size()) coeffs.resize(k + 1, Rat(0));
        coeffs[k] += c;
    };
    bool first = true;
    while (!sc.done()) {
        int sign = 1;
        if (sc.eat('+')) {
        } else if (sc.eat('-')) {
            sign = -1;
        } else if (!first) {
            throw std::invalid_argument("expected + or - in polynomial '" + sc.s + "'");
        }
        first = false;
        Rat coef = 1;
        bool saw_coef = false;
        if (std::isdigit(static_cast<unsigned char>(sc.peek()))) {
            Int num = sc.integer();
            Int den = 1;
            if (sc.eat('/')) den = sc.integer();
            if (den == 0) throw std::invalid_argument("zero denominator in '" + sc.s + "'");
            coef = Rat(num, den);
            coef.canonicalize();
            saw_coef = true;
        }
        long k = 0;
        sc.eat('*');
        if (sc.peek() == 't') {
            sc.eat('t');
            k = 1;
            if (sc.eat('^')) k = sc.integer().get_si();
        } else if (!saw_coef) {
            throw std::invalid_argument("expected coefficient or t in '" + sc.s + "'");
        }
        bump(k, sign * coef);
    }
    return QPoly(std::move(coeffs));
}

}  // namespace

QPoly parse_qpoly(const std::string& s) {
    Scanner sc(s);
    QPoly p = parse_poly_body(sc);
    return p;
}

FieldElement parse_field(const std::string& s, Mode mode) {
    if (mode == Mode::Q) {
        if (s.find('t') != std::string::npos)
            throw std::invalid_argument("'" + s + "' is not a rational (mode Q)");
        std::string compact;
        for (char c : s)
            if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
        return FieldElement(rat_from_string(compact));
    }
    // Q(t): "(num)/(den)" or a bare polynomial / rational.
    std::string str = s;
    size_t split = str.find(")/(");
    if (!str.empty() && str.front() == '(' && split != std::string::npos && str.back() == ')') {
        QPoly num = parse_qpoly(str.substr(1, split - 1));
        QPoly den = parse_qpoly(str.substr(split + 3, str.size() - split - 4));
        if (den.is_zero()) throw std::invalid_argument("zero denominator in '" + s + "'");
        return FieldElement(RatFunc(num, den));
    }
    if (str.find('t') == std::string::npos) {
        std::string compact;
        for (char c : str)
            if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
        return FieldElement(rat_from_string(compact));
    }
    RatFunc r(parse_qpoly(str), QPoly::constant(1));
    return FieldElement(r);
}

}  // namespace dynheights
