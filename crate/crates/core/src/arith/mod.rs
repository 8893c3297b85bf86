//! Word-sized modular arithmetic, primality and factoring, and the finite
//! fields used to reduce circular units.

mod field;
mod modring;

pub use field::{make_field, p_part_log, prime_dlog_p_part, ExtField, FieldCtx, GaloisField, PrimeField, DEFAULT_FIELD_BITS, DEFAULT_EVAL_BITS};
pub use modring::ModRing;

use num_integer::{Integer, Roots};

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let g = (a as i128).extended_gcd(&(m as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(m as i128) as u64)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn isqrt(n: u64) -> u64 {
    n.sqrt()
}

/// Deterministic Miller-Rabin; these bases are exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| add_mod(mul_mod(x, x, n), c, n);
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut q = 1u64;
        let mut ys = 0u64;
        let mut r = 1u64;
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// Prime factorization as (prime, exponent) pairs in increasing order.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut primes = Vec::new();
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        while n % p == 0 {
            primes.push(p);
            n /= p;
        }
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            primes.push(m);
            continue;
        }
        let d = pollard_brent(m);
        stack.push(d);
        stack.push(m / d);
    }
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

pub fn prime_divisors(n: u64) -> Vec<u64> {
    factor(n).into_iter().map(|(p, _)| p).collect()
}

/// Kronecker symbol (a|n) for n > 0.
pub fn kronecker(a: i64, n: u64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut n = n;
    let mut a = a as i128;
    let mut result = 1i32;
    let tz = n.trailing_zeros();
    if tz > 0 {
        if a % 2 == 0 {
            return 0;
        }
        let r8 = a.rem_euclid(8);
        if tz % 2 == 1 && (r8 == 3 || r8 == 5) {
            result = -result;
        }
        n >>= tz;
    }
    // Jacobi symbol for odd n
    let mut n = n as i128;
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Smallest primitive root modulo a prime q.
pub fn primitive_root(q: u64) -> u64 {
    if q == 2 {
        return 1;
    }
    let ps = prime_divisors(q - 1);
    (2..q)
        .find(|&g| ps.iter().all(|&r| pow_mod(g, (q - 1) / r, q) != 1))
        .expect("prime modulus has a primitive root")
}

/// A square root of a modulo the odd prime q (Tonelli-Shanks), if one exists.
pub fn sqrt_mod(a: u64, q: u64) -> Option<u64> {
    let a = a % q;
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (q - 1) / 2, q) != 1 {
        return None;
    }
    let s = (q - 1).trailing_zeros();
    let odd = (q - 1) >> s;
    let z = (2..q).find(|&z| pow_mod(z, (q - 1) / 2, q) == q - 1)?;
    let (mut m, mut c, mut t, mut r) = (s, pow_mod(z, odd, q), pow_mod(a, odd, q), pow_mod(a, odd.div_ceil(2), q));
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, q);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), q);
        m = i;
        c = mul_mod(b, b, q);
        t = mul_mod(t, c, q);
        r = mul_mod(r, b, q);
    }
    Some(r)
}

/// Smallest primitive root modulo an odd prime power p^e.
pub fn primitive_root_prime_power(p: u64, e: u32) -> u64 {
    let g = primitive_root(p);
    if e == 1 || pow_mod(g, p - 1, p * p) != 1 {
        g
    } else {
        g + p
    }
}

/// Multiplicative order of a modulo m (a coprime to m).
pub fn mult_order(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 1;
    }
    let phi = euler_phi(m);
    let mut ord = phi;
    for (r, _) in factor(phi) {
        while ord % r == 0 && pow_mod(a, ord / r, m) == 1 {
            ord /= r;
        }
    }
    ord
}

pub fn euler_phi(m: u64) -> u64 {
    factor(m)
        .into_iter()
        .fold(m, |acc, (p, _)| acc / p * (p - 1))
}

/// Chinese remainder for coprime moduli.
pub fn crt(residues: &[(u64, u64)]) -> (u64, u64) {
    let mut x = 0u64;
    let mut m = 1u64;
    for &(r, n) in residues {
        let inv = inv_mod(m % n, n).expect("coprime moduli");
        let t = mul_mod(sub_mod(r % n, x % n, n), inv, n);
        x += m * t;
        m *= n;
        x %= m;
    }
    (x, m)
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(mut n: u64, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Positive fundamental discriminant test.
pub fn is_fundamental_discriminant(d: u64) -> bool {
    if d <= 1 {
        return false;
    }
    let squarefree = |n: u64| factor(n).iter().all(|&(_, e)| e == 1);
    match d % 4 {
        1 => squarefree(d),
        0 => {
            let m = d / 4;
            (m % 4 == 2 || m % 4 == 3) && squarefree(m)
        }
        _ => false,
    }
}

/// Positive divisors of n in increasing order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factor(n) {
        let cur = ds.clone();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            ds.extend(cur.iter().map(|d| d * pk));
        }
    }
    ds.sort_unstable();
    ds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_mod_matches_brute_force() {
        for q in [3u64, 5, 7, 13, 17, 41, 97, 193, 257, 769] {
            for a in 0..q {
                let brute = (0..q).any(|x| x * x % q == a);
                match sqrt_mod(a, q) {
                    Some(r) => assert_eq!(r * r % q, a),
                    None => assert!(!brute, "{a} mod {q}"),
                }
            }
        }
        let q = 10_652_345_713u64;
        let r = sqrt_mod(257, q).unwrap();
        assert_eq!(mul_mod(r, r, q), 257);
    }

    fn naive_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn primality_matches_trial_division() {
        for n in 0..20000u64 {
            assert_eq!(is_prime(n), naive_prime(n), "{n}");
        }
        assert!(is_prime(18446744073709551557));
        assert!(!is_prime(3215031751));
    }

    #[test]
    fn factoring_reconstructs() {
        for n in [1u64, 2, 360, 1 << 40, 600851475143, 18446744073709551615, 999999000001 * 7] {
            let f = factor(n);
            let prod: u128 = f.iter().map(|&(p, e)| (p as u128).pow(e)).product();
            assert_eq!(prod, n as u128);
            assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }
    }

    #[test]
    fn kronecker_against_euler_criterion() {
        for p in [3u64, 5, 7, 13, 101, 257] {
            for a in -50i64..50 {
                let e = pow_mod(a.rem_euclid(p as i64) as u64, (p - 1) / 2, p);
                let want = if e == 0 { 0 } else if e == 1 { 1 } else { -1 };
                assert_eq!(kronecker(a, p), want, "({a}|{p})");
            }
        }
        assert_eq!(kronecker(257, 3), -1);
        assert_eq!(kronecker(13, 3), 1);
        assert_eq!(kronecker(5, 8), -1);
        assert_eq!(kronecker(17, 8), 1);
    }

    #[test]
    fn primitive_roots() {
        assert_eq!(primitive_root(7), 3);
        assert_eq!(primitive_root(13), 2);
        assert_eq!(primitive_root(257), 3);
        assert_eq!(mult_order(2, 9), 6);
        assert_eq!(primitive_root_prime_power(3, 3), 2);
    }

    #[test]
    fn crt_and_fundamental() {
        let (x, m) = crt(&[(2, 3), (3, 5), (2, 7)]);
        assert_eq!((x, m), (23, 105));
        let fund: Vec<u64> = (1..30).filter(|&d| is_fundamental_discriminant(d)).collect();
        assert_eq!(fund, vec![5, 8, 12, 13, 17, 21, 24, 28, 29]);
    }
}
