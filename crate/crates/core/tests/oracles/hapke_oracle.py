"""High-precision reference values for the reflectance unit tests.

Run with `python3 hapke_oracle.py` (needs mpmath). The printed values are
frozen into the unit tests of the hapke and metrics modules.
"""
from mpmath import mp, mpf, cos, sin, tan, sqrt, pi, acos
mp.dps=40
def P(g,b,c):
    g=g*pi/180
    return c*(1-b)**2/(1-2*b*cos(g)+b*b)**mpf(1.5)+(1-c)*(1-b)**2/(1+2*b*cos(g)+b*b)**mpf(1.5)
def B(g,B0,h): return B0/(1+(1/h)*tan(g*pi/360))
def H(w,mu): return (1+2*mu)/(1+2*mu*sqrt(1-w))
def gdeg(t0,t,phi):
    r=pi/180
    return acos(cos(t0*r)*cos(t*r)+sin(t0*r)*sin(t*r)*cos(phi*r))*180/pi
def full(w,t0,t,phi,b,c,B0,h):
    mu0=cos(t0*pi/180); mu=cos(t*pi/180); g=gdeg(t0,t,phi)
    return w/(4*(mu+mu0))*((1+B(g,B0,h))*P(g,b,c)+H(w,mu)*H(w,mu0)-1)
def lamb(w,mu,mu0): return (1+2*mu)*(1+2*mu0)*w/(4*(mu+mu0)*(1+2*mu*sqrt(1-w))*(1+2*mu0*sqrt(1-w)))
def rel(w,mu,mu0): return w/((1+2*mu*sqrt(1-w))*(1+2*mu0*sqrt(1-w)))
def lin(w,mu,mu0): return w/(4*mu*mu0+2*mu+2*mu0+1)
def D(t0,t):
    mu0=cos(t0*pi/180); mu=cos(t*pi/180); return 4*mu*mu0+2*mu+2*mu0+1
c45=cos(pi/4)
print("P(90;.5,.5)", P(90,mpf('0.5'),mpf('0.5')))
print("B(60;1,.1)", B(60,1,mpf('0.1')))
print("H(.5,1)", H(mpf('0.5'),1))
print("full", full(mpf('0.5'),45,45,0,mpf('0.3'),mpf('0.6'),mpf('0.5'),mpf('0.1')))
print("lamb(.5,c45,c45)", lamb(mpf('0.5'),c45,c45))
print("rel(.5,1,1)", rel(mpf('0.5'),1,1))
print("lin(.5,c45,c45)", lin(mpf('0.5'),c45,c45))
print("psi D_ref/D_loc (30,60 vs 45,45)", D(45,45)/D(30,60), "inverse", D(30,60)/D(45,45))
for w in ['0.1','0.5','0.9']: print("lamb 45 band", w, lamb(mpf(w),c45,c45))
for k in range(1,10): print("rel45", k, rel(mpf(k)/10,c45,c45))
